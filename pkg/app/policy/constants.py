"""
Vocabulaire XACML 1.0 utilisé par le moteur (sous-ensemble fermé).
"""

POLICY_NS = "urn:oasis:names:tc:xacml:1.0:policy"
CONTEXT_NS = "urn:oasis:names:tc:xacml:1.0:context"

XSD_STRING = "http://www.w3.org/2001/XMLSchema#string"
XSD_ANY_URI = "http://www.w3.org/2001/XMLSchema#anyURI"

STRING_EQUAL = "urn:oasis:names:tc:xacml:1.0:function:string-equal"
ANY_URI_EQUAL = "urn:oasis:names:tc:xacml:1.0:function:anyURI-equal"

# Fonction de comparaison -> type de donnée attendu
MATCH_FUNCTIONS = {
    STRING_EQUAL: XSD_STRING,
    ANY_URI_EQUAL: XSD_ANY_URI,
}

_POLICY_ALG = "urn:oasis:names:tc:xacml:1.0:policy-combining-algorithm:"
_RULE_ALG = "urn:oasis:names:tc:xacml:1.0:rule-combining-algorithm:"

PERMIT_OVERRIDES = "permit-overrides"
DENY_OVERRIDES = "deny-overrides"
FIRST_APPLICABLE = "first-applicable"
ALGORITHMS = (PERMIT_OVERRIDES, DENY_OVERRIDES, FIRST_APPLICABLE)

POLICY_PERMIT_OVERRIDES = _POLICY_ALG + PERMIT_OVERRIDES
POLICY_DENY_OVERRIDES = _POLICY_ALG + DENY_OVERRIDES
POLICY_FIRST_APPLICABLE = _POLICY_ALG + FIRST_APPLICABLE
RULE_PERMIT_OVERRIDES = _RULE_ALG + PERMIT_OVERRIDES
RULE_DENY_OVERRIDES = _RULE_ALG + DENY_OVERRIDES
RULE_FIRST_APPLICABLE = _RULE_ALG + FIRST_APPLICABLE

POLICY_COMBINING_ALGS = {_POLICY_ALG + a: a for a in ALGORITHMS}
RULE_COMBINING_ALGS = {_RULE_ALG + a: a for a in ALGORITHMS}

# Identifiants d'attributs
SUBJECT_ID = "urn:oasis:names:tc:xacml:1.0:subject:subject-id"
SUBJECT_ROLE = "urn:oasis:names:tc:xacml:1.0:subject:role"
RESOURCE_ID = "urn:oasis:names:tc:xacml:1.0:resource:resource-id"
ACTION_ID = "urn:oasis:names:tc:xacml:1.0:action:action-id"
RPARAMS = "RParams"
APARAMS = "AParams"

ACTIVATE_ROLE = "activate-role"

STATUS_OK = "ok"
