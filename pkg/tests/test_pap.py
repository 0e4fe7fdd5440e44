import threading

import pytest

from app.compiler.core import write_policy_dir
from app.pap.core import PolicyAdministrationPoint, PolicyLoadError, load_policy_dir
from app.pdp.core import PolicyStore, decide
from app.policy.schema import Decision
from tests.conftest import FIG1


@pytest.fixture
def policy_dir(student_store, tmp_path):
    directory = tmp_path / "policies"
    write_policy_dir(student_store, directory)
    return directory


def test_load_compiled_directory(policy_dir, student_store, register_request):
    store = load_policy_dir(policy_dir)
    assert len(store) == 3
    assert store.roots == student_store.roots
    assert decide(store, register_request).decision is Decision.PERMIT


def test_empty_directory(tmp_path):
    (tmp_path / "roots.txt").write_text("", encoding="utf-8")
    store = load_policy_dir(tmp_path)
    assert len(store) == 0 and store.roots == ()


def test_missing_roots(tmp_path):
    with pytest.raises(PolicyLoadError) as exc:
        load_policy_dir(tmp_path)
    assert exc.value.code == "no-roots"


def test_root_naming_absent_id(tmp_path):
    (tmp_path / "roots.txt").write_text("RPS:nobody:role\n", encoding="utf-8")
    with pytest.raises(PolicyLoadError) as exc:
        load_policy_dir(tmp_path)
    assert exc.value.code == "dangling-ref"


def test_dangling_reference_is_a_load_error(tmp_path):
    (tmp_path / "rps.xml").write_bytes(FIG1)
    (tmp_path / "roots.txt").write_text("RPS:student:role:studentid-02123781\n", encoding="utf-8")
    with pytest.raises(PolicyLoadError) as exc:
        load_policy_dir(tmp_path)
    assert exc.value.code == "dangling-ref"
    assert exc.value.diagnostics == ["dangling-ref: PPS:student:role:studentid-02123781"]


def test_parse_error_names_file(policy_dir):
    (policy_dir / "broken.xml").write_bytes(b"<PolicySet>\n<oops>")
    with pytest.raises(PolicyLoadError) as exc:
        load_policy_dir(policy_dir)
    assert exc.value.code == "parse"
    assert "broken.xml" in str(exc.value)


def test_swap_store(policy_dir, register_request):
    pap = PolicyAdministrationPoint(policy_dir)
    assert decide(pap.store, register_request).decision is Decision.NOT_APPLICABLE
    first = pap.reload()
    assert decide(pap.store, register_request).decision is Decision.PERMIT
    second = pap.swap_store(PolicyStore.empty())
    assert first != second
    assert decide(pap.store, register_request).decision is Decision.NOT_APPLICABLE


def test_failed_reload_keeps_snapshot(policy_dir, register_request):
    pap = PolicyAdministrationPoint(policy_dir)
    pap.reload()
    before = pap.snapshot()
    (policy_dir / "broken.xml").write_bytes(b"not xml")
    with pytest.raises(PolicyLoadError):
        pap.reload()
    assert pap.snapshot() is before
    assert decide(pap.store, register_request).decision is Decision.PERMIT


def test_concurrent_evaluations_see_one_snapshot(student_store, register_request):
    pap = PolicyAdministrationPoint("unused", student_store)
    seen = []
    stop = threading.Event()

    def evaluate():
        while True:
            _, store = pap.snapshot()
            seen.append(decide(store, register_request).decision)
            if stop.is_set():
                break

    workers = [threading.Thread(target=evaluate) for _ in range(4)]
    for worker in workers:
        worker.start()
    for i in range(50):
        pap.swap_store(PolicyStore.empty() if i % 2 == 0 else student_store)
    stop.set()
    for worker in workers:
        worker.join()
    assert seen
    assert set(seen) <= {Decision.PERMIT, Decision.NOT_APPLICABLE}
