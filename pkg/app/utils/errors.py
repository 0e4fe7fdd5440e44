"""
Exceptions communes du moteur PRBAC.
Chaque erreur porte un code stable, lisible par une machine.
"""
from typing import Optional


class PRBACError(Exception):
    """Exception de base: un code d'erreur et un détail optionnel."""

    def __init__(self, code: str, detail: Optional[str] = None, line: Optional[int] = None):
        """
        Initialise l'erreur.

        Args:
            code: Code d'erreur stable (ex: "unknown-user", "tampered")
            detail: Message complémentaire
            line: Numéro de ligne (erreurs de parsing)
        """
        self.code = code
        self.detail = detail
        self.line = line
        super().__init__(str(self))

    def __str__(self) -> str:
        text = self.code
        if self.line is not None:
            text += f" (ligne {self.line})"
        if self.detail:
            text += f": {self.detail}"
        return text
