"""
Point d'administration (PAP): chargement d'un répertoire de politiques et
instantané du PolicyStore remplaçable de façon atomique.
"""
import threading
import uuid
from pathlib import Path
from typing import List, Optional, Tuple, Union

from app.compiler.core import ROOTS_FILE
from app.pdp.core import PolicyStore, StoreError
from app.policy.core import well_formed
from app.policy.schema import PolicySet
from app.policy.xml_io import PolicyParseError, parse_policy_set
from app.utils.errors import PRBACError
from app.utils.logging import get_logger

logger = get_logger(__name__)

Snapshot = Tuple[str, PolicyStore]


class PolicyLoadError(PRBACError):
    """Échec de chargement: "parse", "dangling-ref", "no-roots", "duplicate-id"."""

    def __init__(self, code: str, detail: Optional[str] = None, line: Optional[int] = None, diagnostics: Optional[List[str]] = None):
        super().__init__(code, detail, line)
        self.diagnostics = diagnostics or [str(self)]


def load_policy_dir(path: Union[str, Path]) -> PolicyStore:
    """
    Charge tous les fichiers .xml du répertoire et roots.txt.

    Les références pendantes entre identifiants chargés sont des erreurs de
    chargement, pas des Indeterminate à l'exécution.

    Raises:
        PolicyLoadError: "parse", "dangling-ref", "no-roots" ou "duplicate-id"
    """
    directory = Path(path)
    roots_file = directory / ROOTS_FILE
    if not roots_file.is_file():
        raise PolicyLoadError("no-roots", str(roots_file))

    policy_sets: List[PolicySet] = []
    for file in sorted(directory.glob("*.xml")):
        try:
            ps, diag = parse_policy_set(file.read_bytes())
        except PolicyParseError as e:
            raise PolicyLoadError("parse", f"{file.name}: {e}", line=e.line) from e
        for note in diag.normalizations:
            logger.info("Normalisation appliquée", extra={"file": file.name, "note": note})
        policy_sets.append(ps)

    roots = [line.strip() for line in roots_file.read_text(encoding="utf-8").splitlines() if line.strip()]

    try:
        store = PolicyStore.build(policy_sets, roots)
    except StoreError as e:
        code = "dangling-ref" if e.code == "unknown-root" else e.code
        raise PolicyLoadError(code, e.detail) from e

    known = set(store.by_id)
    problems: List[str] = []
    for ps in store.policy_sets:
        problems.extend(well_formed(ps, known))
    if problems:
        dangling = [p for p in problems if p.startswith("dangling-ref")]
        code = "dangling-ref" if dangling else "parse"
        raise PolicyLoadError(code, problems[0].partition(": ")[2], diagnostics=sorted(set(problems)))

    logger.info("Répertoire de politiques chargé", extra={"directory": str(directory), "policy_sets": len(store), "roots": len(store.roots)})
    return store


class PolicyAdministrationPoint:
    """
    Détient l'instantané courant (identifiant, store). Les lecteurs prennent
    l'instantané une fois en début de requête; le verrou ne protège que le
    remplacement.
    """

    def __init__(self, policy_dir: Union[str, Path], store: Optional[PolicyStore] = None):
        self.policy_dir = Path(policy_dir)
        self._lock = threading.Lock()
        self._snapshot: Snapshot = (uuid.uuid4().hex, store if store is not None else PolicyStore.empty())

    def snapshot(self) -> Snapshot:
        return self._snapshot

    @property
    def store(self) -> PolicyStore:
        return self._snapshot[1]

    def swap_store(self, new_store: PolicyStore) -> str:
        """
        Remplace le store servi.

        Returns:
            L'identifiant de l'instantané précédent
        """
        new_snapshot = (uuid.uuid4().hex, new_store)
        with self._lock:
            previous, self._snapshot = self._snapshot, new_snapshot
        logger.info("Instantané remplacé", extra={"previous": previous[0], "current": new_snapshot[0], "policy_sets": len(new_store)})
        return previous[0]

    def reload(self) -> str:
        """
        Relit policy_dir puis remplace l'instantané. En cas d'échec,
        l'instantané courant reste en service.

        Raises:
            PolicyLoadError
        """
        try:
            store = load_policy_dir(self.policy_dir)
        except PolicyLoadError as e:
            logger.warning("Rechargement refusé", extra={"directory": str(self.policy_dir), "code": e.code, "diagnostics": e.diagnostics})
            raise
        return self.swap_store(store)
