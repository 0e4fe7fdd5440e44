import pytest
from pydantic import ValidationError

from app.policy.constants import ANY_URI_EQUAL, POLICY_PERMIT_OVERRIDES, RPARAMS, SUBJECT_ROLE, XSD_ANY_URI, XSD_STRING
from app.policy.core import bag_lookup, well_formed
from app.policy.schema import (
    Attribute,
    AttributeRef,
    Decision,
    MatchClause,
    PolicySet,
    PolicySetIdReference,
    ResponseCtx,
    Target,
)
from app.policy.xml_io import parse_policy_set
from tests.conftest import FIG1, STUDENT_ROLE_URI

PPS_ID = "PPS:student:role:studentid-02123781"


def test_fig1_well_formed_with_known_reference():
    ps, _ = parse_policy_set(FIG1)
    assert well_formed(ps, {PPS_ID}) == []


def test_fig1_dangling_reference():
    ps, _ = parse_policy_set(FIG1)
    assert well_formed(ps, set()) == [f"dangling-ref: {PPS_ID}"]


def test_type_mismatch_detected():
    clause = MatchClause(function=ANY_URI_EQUAL, literal="x", designator=AttributeRef(attribute_id=RPARAMS, data_type=XSD_STRING))
    ps = PolicySet(id="ps", combining=POLICY_PERMIT_OVERRIDES, target=Target(subjects=((clause,),)))
    violations = well_formed(ps, set())
    assert len(violations) == 1
    assert violations[0].startswith("type-mismatch")


def test_unsupported_combining_and_duplicate_ids():
    inner = PolicySet(id="dup", combining=POLICY_PERMIT_OVERRIDES)
    ps = PolicySet(id="dup", combining="urn:example:only-one-applicable", children=(inner,))
    violations = well_formed(ps, set())
    assert "duplicate-id: dup" in violations
    assert any(v.startswith("unsupported-combining") for v in violations)


def test_reference_to_nested_set_is_not_dangling():
    inner = PolicySet(id="inner", combining=POLICY_PERMIT_OVERRIDES)
    ps = PolicySet(id="outer", combining=POLICY_PERMIT_OVERRIDES, children=(inner, PolicySetIdReference(ref="inner")))
    assert well_formed(ps, set()) == []


def test_bag_lookup():
    role = AttributeRef(attribute_id=SUBJECT_ROLE, data_type=XSD_ANY_URI)
    rparams = AttributeRef(attribute_id=RPARAMS)
    bag = (
        Attribute(ref=role, value=STUDENT_ROLE_URI),
        Attribute(ref=rparams, value="studentid-02123781"),
        Attribute(ref=rparams, value="term-2006"),
    )
    assert bag_lookup(bag, rparams) == ["studentid-02123781", "term-2006"]
    assert bag_lookup(bag, AttributeRef(attribute_id="absent")) == []
    # même identifiant, type différent
    assert bag_lookup(bag, AttributeRef(attribute_id=SUBJECT_ROLE)) == []


def test_response_status_invariant():
    assert ResponseCtx(decision=Decision.PERMIT).status == "ok"
    with pytest.raises(ValidationError):
        ResponseCtx(decision=Decision.INDETERMINATE)
    with pytest.raises(ValidationError):
        ResponseCtx(decision=Decision.PERMIT, status="cycle")
    assert ResponseCtx(decision=Decision.NOT_APPLICABLE, status="activation-denied").status == "activation-denied"
