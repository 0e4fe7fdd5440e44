import pytest

from app.compiler.core import build_access_request, compile_model
from app.rbac.schema import (
    ModelDocument,
    ParamBinding,
    Privilege,
    PrivAssignment,
    RoleDecl,
    RoleInstance,
    Service,
    User,
    UserAssignment,
)

STUDENT_ID = "02123781"
STUDENT_ROLE_URI = "urn:example:role-values:student:rparams:studentid-02123781"

FIG1 = b"""<PolicySet xmlns="urn:oasis:names:tc:xacml:1.0:policy"
  PolicySetId="RPS:student:role:studentid-02123781"
  PolicyCombiningAlgId=
    "urn:oasis:names:tc:xacml:1.0:policy-combining-algorithm:permit-overrides">
  <Target>
  <Subjects>
  <Subject>
  <SubjectMatch MatchId=
    "urn:oasis:names:tc:xacml:1.0:function:anyURI-equal">
  <AttributeValue DataType=
    "http://www.w3.org/2001/XMLSchema#anyURI">
    urn:example:role-values:student:rparams:studentid-02123781
  </AttributeValue>
  <SubjectAttributeDesignator
    AttributeId="urn:oasis:names:tc:xacml:1.0:subject:role"
    DataType="http://www.w3.org/2001/XMLSchema#anyURI"/>
  </SubjectMatch>
  <SubjectMatch MatchId=
    "urn:oasis:names:tc:xacml:1.0:function:string-equal">
  <AttributeValue
    DataType="http://www.w3.org/2001/XMLSchema#string">
    studentid-02123781
  </AttributeValue>
  <SubjectAttributeDesignator
    AttributeId="RParams"
    DataType="http://www.w3.org/2001/XMLSchema#string"/>
  </SubjectMatch>
  </Subject>
  </Subjects>
  </Target>
  <PolicySetIdReference>PPS:student:role:studentid-02123781
  </PolicySetIdReference>
</PolicySet>
"""

FIG2_ACTIONS = b"""<Actions>
  <Action>
  <ActionMatch
    MatchId="urn:oasis:names:tc:xacml:1.0:function:string-
    equal">
  <AttributeValue
    DataType="http://www.w3.org/2001/XMLSchema#string">
    register</AttributeValue>
  <ActionAttributeDesignator
    AttributeId="urn:oasis:names:tc:xacml:1.0:action:action-id"
    DataType="http://www.w3.org/2001/XMLSchema#string"/>
  <AttributeValue
    DataType="http://www.w3.org/2001/XMLSchema#string">
    studentid-02123781</AttributeValue>
  <ActionAttributeDesignator
    AttributeId="AParams"
    DataType="http://www.w3.org/2001/XMLSchema#string"/>
  </ActionMatch>
  </Action>
</Actions>"""

# Fragment des actions embarqué dans une politique minimale
FIG2_POLICY = (
    b'<PolicySet xmlns="urn:oasis:names:tc:xacml:1.0:policy" PolicySetId="PPS:fig2"'
    b' PolicyCombiningAlgId="urn:oasis:names:tc:xacml:1.0:policy-combining-algorithm:permit-overrides">'
    b'<Policy PolicyId="PPS:fig2:policy"'
    b' RuleCombiningAlgId="urn:oasis:names:tc:xacml:1.0:rule-combining-algorithm:permit-overrides">'
    b'<Target>' + FIG2_ACTIONS + b'</Target>'
    b'<Rule RuleId="permit" Effect="Permit"/>'
    b'</Policy></PolicySet>'
)


def student_instance(student_id: str = STUDENT_ID) -> RoleInstance:
    return RoleInstance.of("student", studentid=student_id)


@pytest.fixture
def student_model() -> ModelDocument:
    """Un utilisateur, le rôle student[studentid] et le privilège (registration, register)."""
    binding = ParamBinding(name="studentid", value=STUDENT_ID)
    return ModelDocument(
        users=(User(id="u1"),),
        roles=(RoleDecl(name="student", param_names=("studentid",)),),
        services=(Service(id="registration", actions=("register", "drop")),),
        ua=(UserAssignment(user="u1", role_instance=student_instance()),),
        pa=(
            PrivAssignment(
                role="student",
                role_param_pattern=(binding,),
                privilege=Privilege(service="registration", action="register", aparams=(binding,)),
            ),
        ),
    )


@pytest.fixture
def student_store(student_model):
    return compile_model(student_model)


@pytest.fixture
def register_request():
    """Requête du scénario: rôle student activé, action register avec son AParams."""
    return build_access_request(
        student_instance(),
        "registration",
        "register",
        (ParamBinding(name="studentid", value=STUDENT_ID),),
        user="u1",
    )
