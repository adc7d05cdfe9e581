"""
Hiérarchie d'exceptions du solveur.
Les erreurs de configuration et les erreurs numériques sont séparées
pour que la CLI puisse choisir son code de sortie.
"""


class SirgateError(Exception):
    """Racine de toutes les erreurs du paquet"""


# --- Configuration -----------------------------------------------------------

class ConfigError(SirgateError):
    """Erreur de configuration (code de sortie 1)"""


class ConfigValidationError(ConfigError):
    """Une ou plusieurs invariantes de configuration sont violées.

    Args:
        violations: liste de triplets (kind, field, message)
    """

    def __init__(self, violations: list[tuple[str, str, str]]):
        self.violations = list(violations)
        lines = [f"{kind}({field}): {message}" for kind, field, message in self.violations]
        super().__init__("configuration invalide: " + "; ".join(lines))

    @property
    def kinds(self) -> set[str]:
        return {kind for kind, _, _ in self.violations}

    @property
    def fields(self) -> set[str]:
        return {field for _, field, _ in self.violations}


class ParseError(ConfigError):
    def __init__(self, line: int, reason: str):
        self.line = line
        self.reason = reason
        super().__init__(f"ligne {line}: {reason}")


class UnknownKeyError(ConfigError):
    def __init__(self, name: str):
        self.name = name
        super().__init__(f"clé inconnue: {name}")


class MissingKeyError(ConfigError):
    def __init__(self, name: str):
        self.name = name
        super().__init__(f"clé manquante: {name}")


# --- Domaine -----------------------------------------------------------------

class OutOfDomainError(SirgateError, ValueError):
    """Coordonnée ou fenêtre hors du domaine d'évaluation"""


class IndexOutOfRangeError(SirgateError, IndexError):
    """Indice de cellule hors de la région"""


class NegativeInfectedError(SirgateError, ValueError):
    """Densité d'infectés négative passée à α(I)"""


class EmptyRecordError(SirgateError, ValueError):
    """Enregistrement de simulation sans aucune trame"""


# --- Numérique (code de sortie 2) -------------------------------------------

class NumericalError(SirgateError):
    """Échec numérique du schéma"""


class SingularMatrixError(NumericalError):
    def __init__(self, row: int, pivot: float):
        self.row = row
        self.pivot = pivot
        super().__init__(f"pivot quasi nul à la ligne {row}: {pivot:.3e}")


class PositivityViolationError(NumericalError):
    def __init__(self, region: int, compartment: str, value: float, tolerance: float):
        self.region = region
        self.compartment = compartment
        self.value = value
        self.tolerance = tolerance
        super().__init__(
            f"valeur négative {value:.3e} (tolérance {tolerance:.3e}) "
            f"dans la région {region}, compartiment {compartment}"
        )


class StiffnessStepTooLargeError(NumericalError):
    def __init__(self, dt: float, bound: float):
        self.dt = dt
        self.bound = bound
        super().__init__(f"pas RK4 {dt:.3e} au-delà de la borne de stabilité {bound:.3e}")


class QuadratureUnderResolvedError(NumericalError):
    def __init__(self, change: float):
        self.change = change
        super().__init__(f"quadrature sous-résolue: variation {change:.3e} après doublement")


class DegenerateAtEveryPointError(NumericalError):
    """σ s'annule sur un ensemble de mesure positive dans la fenêtre"""


class SimulationStepError(NumericalError):
    """Erreur d'un pas de temps, horodatée"""

    def __init__(self, t: float, cause: Exception):
        self.t = t
        self.cause = cause
        super().__init__(f"échec à t={t:.6g} j: {cause}")
