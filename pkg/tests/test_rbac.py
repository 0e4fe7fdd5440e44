import pytest

from app.policy.schema import Decision
from app.rbac.core import (
    ModelError,
    authorized_privileges,
    dump_model,
    enabled_role_instances,
    junior_closure,
    load_model,
    oracle_decide,
    privilege_covers,
    service_relation,
    validate_model,
)
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
from tests.conftest import STUDENT_ID, student_instance


def _rules(doc):
    return {v.rule for v in validate_model(doc)}


def _chain_model() -> ModelDocument:
    """a > b > c, chaque rôle a un privilège propre sur s."""
    return ModelDocument(
        users=(User(id="u"),),
        roles=(
            RoleDecl(name="a", juniors=("b",)),
            RoleDecl(name="b", juniors=("c",)),
            RoleDecl(name="c"),
        ),
        services=(Service(id="s", actions=("ra", "rb", "rc")),),
        ua=(UserAssignment(user="u", role_instance=RoleInstance(role="a")),),
        pa=tuple(
            PrivAssignment(role=r, privilege=Privilege(service="s", action=f"r{r}"))
            for r in ("a", "b", "c")
        ),
    )


def test_valid_model_has_no_violation(student_model):
    assert validate_model(student_model) == []


def test_hierarchy_cycle_reported_once():
    doc = ModelDocument(roles=(RoleDecl(name="a", juniors=("b",)), RoleDecl(name="b", juniors=("a",))))
    cycles = [v for v in validate_model(doc) if v.rule == "hierarchy-cycle"]
    assert len(cycles) == 1
    assert cycles[0].entity == "a -> b"


def test_self_junior_is_a_cycle():
    doc = ModelDocument(roles=(RoleDecl(name="a", juniors=("a",)),))
    assert "hierarchy-cycle" in _rules(doc)


def test_binding_mismatch_on_missing_parameter(student_model):
    bad = student_model.model_copy(update={"ua": (UserAssignment(user="u1", role_instance=RoleInstance(role="student")),)})
    assert "binding-mismatch" in _rules(bad)


def test_wildcard_in_activation_rejected(student_model):
    ua = UserAssignment(user="u1", role_instance=RoleInstance.of("student", studentid="*"))
    assert "wildcard-in-activation" in _rules(student_model.model_copy(update={"ua": (ua,)}))


def test_unknown_references(student_model):
    ua = UserAssignment(user="ghost", role_instance=student_instance())
    pa = PrivAssignment(role="student", privilege=Privilege(service="library", action="borrow"))
    rules = _rules(student_model.model_copy(update={"ua": (ua,), "pa": (pa,)}))
    assert {"unknown-user", "unknown-service"} <= rules


def test_unknown_action_but_null_allowed(student_model):
    ok = PrivAssignment(role="student", privilege=Privilege(service="registration", action="null"))
    bad = PrivAssignment(role="student", privilege=Privilege(service="registration", action="teach"))
    assert validate_model(student_model.model_copy(update={"pa": (ok,)})) == []
    assert "unknown-action" in _rules(student_model.model_copy(update={"pa": (bad,)}))


def test_duplicate_ids_and_bad_identifier():
    doc = ModelDocument(
        users=(User(id="u"), User(id="u")),
        roles=(RoleDecl(name="bad-name"),),
        services=(Service(id="s", actions=()),),
    )
    assert {"duplicate-id", "bad-identifier", "empty-actions"} <= _rules(doc)


def test_junior_with_parameters_unknown_to_senior_is_valid():
    doc = ModelDocument(roles=(
        RoleDecl(name="senior", param_names=("a",), juniors=("junior",)),
        RoleDecl(name="junior", param_names=("b",)),
    ))
    assert validate_model(doc) == []


@pytest.mark.parametrize("user, value, rule", [
    ("u1 ", STUDENT_ID, "untrimmed"),
    ("u1", f"{STUDENT_ID} ", "untrimmed"),
    ("u1", f" {STUDENT_ID}", "untrimmed"),
    ("u1\x01", STUDENT_ID, "bad-char"),
    ("u1", f"{STUDENT_ID}\x0b", "bad-char"),
    ("u1", "\ufffe", "bad-char"),
])
def test_text_rejected_before_compilation(student_model, user, value, rule):
    ua = UserAssignment(user=user, role_instance=RoleInstance.of("student", studentid=value))
    doc = student_model.model_copy(update={"users": (User(id=user),), "ua": (ua,)})
    assert rule in _rules(doc)


def test_untrimmed_action_and_aparam(student_model):
    services = (Service(id="registration", actions=("register", " drop")),)
    assert "untrimmed" in _rules(student_model.model_copy(update={"services": services}))
    (pa,) = student_model.pa
    padded = pa.model_copy(update={"privilege": pa.privilege.model_copy(
        update={"aparams": (ParamBinding(name="studentid", value=f"{STUDENT_ID}\t"),)}
    )})
    assert "untrimmed" in _rules(student_model.model_copy(update={"pa": (padded,)}))


def test_parameter_value_with_colon_rejected(student_model):
    ua = UserAssignment(user="u1", role_instance=RoleInstance.of("student", studentid="a:b"))
    assert "bad-value" in _rules(student_model.model_copy(update={"ua": (ua,)}))


def test_enabled_role_instances(student_model):
    assert enabled_role_instances(student_model, "u1") == {student_instance()}
    with pytest.raises(ModelError) as exc:
        enabled_role_instances(student_model, "nobody")
    assert exc.value.code == "unknown-user"


def test_user_without_assignment_has_no_roles(student_model):
    doc = student_model.model_copy(update={"users": student_model.users + (User(id="u2"),)})
    assert enabled_role_instances(doc, "u2") == set()


def test_authorized_privileges_follow_hierarchy():
    doc = _chain_model()
    actions = {p.action for p in authorized_privileges(doc, RoleInstance(role="a"))}
    assert actions == {"ra", "rb", "rc"}
    assert {p.action for p in authorized_privileges(doc, RoleInstance(role="c"))} == {"rc"}
    assert junior_closure(doc, "a") == {"b", "c"}


def test_pattern_mismatch_gives_nothing(student_model):
    assert authorized_privileges(student_model, student_instance("99999999")) == set()


def test_privilege_covers_wildcard_and_literal():
    literal = Privilege(service="s", action="r", aparams=(ParamBinding(name="x", value="1"),))
    wildcard = Privilege(service="s", action="r", aparams=(ParamBinding(name="x", value="*"),))
    assert privilege_covers(literal, "s", "r", [ParamBinding(name="x", value="1")])
    assert not privilege_covers(literal, "s", "r", [])
    assert privilege_covers(wildcard, "s", "r", [])


def test_oracle_student_scenario(student_model):
    aparams = [ParamBinding(name="studentid", value=STUDENT_ID)]
    assert oracle_decide(student_model, "u1", student_instance(), "registration", "register", aparams) is Decision.PERMIT
    assert oracle_decide(student_model, "u1", student_instance(), "registration", "drop", aparams) is Decision.NOT_APPLICABLE
    assert oracle_decide(student_model, "u1", student_instance("99999999"), "registration", "register", aparams) is Decision.NOT_APPLICABLE


def test_oracle_unknown_role(student_model):
    with pytest.raises(ModelError) as exc:
        oracle_decide(student_model, "u1", RoleInstance(role="teacher"), "registration", "register")
    assert exc.value.code == "unknown-role"


def test_service_relation_includes_juniors():
    assert service_relation(_chain_model()) == {("a", "s"), ("b", "s"), ("c", "s")}


def test_model_json_reload(student_model, tmp_path):
    path = tmp_path / "model.json"
    path.write_text(dump_model(student_model), encoding="utf-8")
    assert load_model(path) == student_model
    assert load_model(dump_model(student_model)) == student_model


def test_unknown_key_is_model_format_error():
    with pytest.raises(ModelError) as exc:
        load_model('{"users": [], "objects": []}')
    assert exc.value.code == "model-format"
