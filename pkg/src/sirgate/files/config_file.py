"""
Fichier de configuration plat: une ligne `clé = valeur` par champ,
commentaires `#`. Les types sont validés par un modèle Pydantic dérivé des
sections de configuration; les invariantes par les sections elles-mêmes.
"""

import logging
import re
from dataclasses import fields
from pathlib import Path
from typing import Any, get_type_hints

from pydantic import ConfigDict, ValidationError, create_model

from sirgate.config import (
    EpidemicParams,
    InitialData,
    NumericsConfig,
    PolicyConfig,
    SimulationConfig,
    TwoRegionGrid,
    reference_config,
)
from sirgate.errors import ConfigValidationError, MissingKeyError, ParseError, UnknownKeyError

logger = logging.getLogger(__name__)

_KEY = re.compile(r"^[A-Za-z_][A-Za-z0-9_]*$")

# Clés obligatoires: l'horizon et le pas ne prennent jamais de valeur implicite
REQUIRED_KEYS = ("dt", "t_final")

DEFAULT_CONFIG_NAME = "default.cfg"

SECTIONS: dict[str, type] = {
    "grid": TwoRegionGrid,
    "params": EpidemicParams,
    "initial": InitialData,
    "policy": PolicyConfig,
    "numerics": NumericsConfig,
}
TOP_LEVEL = ("dt", "t_final", "alpha_form", "coupling_sweeps")

# Ordre d'écriture: (section, titre du bloc)
LAYOUT: tuple[tuple[str | None, str], ...] = (
    ("grid", "maillage"),
    (None, "temps et couplage"),
    ("params", "paramètres épidémiques"),
    ("initial", "données initiales"),
    ("policy", "politique de confinement"),
    ("numerics", "choix numériques et sorties"),
)


def _file_fields() -> dict[str, tuple[str | None, Any, Any]]:
    """Clé -> (section, type, défaut), dans l'ordre de LAYOUT"""
    defaults = reference_config()
    hints = get_type_hints(SimulationConfig)
    out: dict[str, tuple[str | None, Any, Any]] = {}
    for section, _ in LAYOUT:
        if section is None:
            for name in TOP_LEVEL:
                out[name] = (None, hints[name], getattr(defaults, name))
            continue
        cls = SECTIONS[section]
        section_hints = get_type_hints(cls)
        instance = getattr(defaults, section)
        for f in fields(cls):
            out[f.name] = (section, section_hints[f.name], getattr(instance, f.name))
    return out


FILE_FIELDS = _file_fields()

# Modèle Pydantic pour validation automatique des types
ConfigFileModel = create_model(
    "ConfigFileModel",
    __config__=ConfigDict(extra="forbid"),
    **{
        name: (annotation, ... if name in REQUIRED_KEYS else default)
        for name, (_, annotation, default) in FILE_FIELDS.items()
    },
)


def _read_pairs(text: str) -> tuple[dict[str, Any], dict[str, int]]:
    values: dict[str, Any] = {}
    lines: dict[str, int] = {}
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ParseError(number, "`clé = valeur` attendu")
        key, value = (part.strip() for part in line.split("=", 1))
        if not _KEY.match(key):
            raise ParseError(number, f"nom de clé invalide: {key!r}")
        if not value:
            raise ParseError(number, f"valeur manquante pour {key}")
        if key in values:
            raise ParseError(number, f"clé dupliquée: {key}")
        values[key] = None if value.lower() == "none" else value
        lines[key] = number
    return values, lines


def parse_config_text(text: str) -> SimulationConfig:
    """Analyse le contenu d'un fichier de configuration.

    Raises:
        ParseError: ligne mal formée ou valeur de type invalide
        UnknownKeyError: clé inconnue
        MissingKeyError: clé obligatoire absente
        ConfigValidationError: invariantes violées (toutes rapportées ensemble)
    """
    values, lines = _read_pairs(text)
    for key in values:
        if key not in FILE_FIELDS:
            raise UnknownKeyError(key)
    try:
        model = ConfigFileModel(**values)
    except ValidationError as e:
        error = e.errors()[0]
        key = str(error["loc"][0]) if error["loc"] else "?"
        if error["type"] == "missing":
            raise MissingKeyError(key) from e
        if error["type"] == "extra_forbidden":
            raise UnknownKeyError(key) from e
        raise ParseError(lines.get(key, 0), f"{key}: {error['msg']}") from e

    data = model.model_dump()
    violations: list[tuple[str, str, str]] = []
    sections: dict[str, Any] = {}
    for name, cls in SECTIONS.items():
        kwargs = {f.name: data[f.name] for f in fields(cls)}
        try:
            sections[name] = cls(**kwargs)
        except ConfigValidationError as e:
            violations.extend(e.violations)
    if violations:
        raise ConfigValidationError(violations)
    return SimulationConfig(**sections, **{name: data[name] for name in TOP_LEVEL})


def parse_config(path: str | Path) -> SimulationConfig:
    """Lit un fichier de configuration"""
    path = Path(path)
    cfg = parse_config_text(path.read_text(encoding="utf-8"))
    logger.info(f"Configuration chargée depuis {path}")
    return cfg


def _format_value(value: Any) -> str:
    if value is None:
        return "none"
    if hasattr(value, "value"):
        return str(value.value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def format_config(cfg: SimulationConfig) -> str:
    """Texte du fichier de configuration; parse_config_text(format_config(c)) == c"""
    blocks: list[str] = []
    for section, title in LAYOUT:
        lines = [f"# --- {title} ---"]
        if section is None:
            names, source = TOP_LEVEL, cfg
        else:
            source = getattr(cfg, section)
            names = tuple(f.name for f in fields(SECTIONS[section]))
        lines.extend(f"{name} = {_format_value(getattr(source, name))}" for name in names)
        blocks.append("\n".join(lines))
    return "\n\n".join(blocks) + "\n"


def write_default_config(path: str | Path = DEFAULT_CONFIG_NAME) -> Path:
    """Écrit la configuration de référence (default.cfg par défaut)"""
    path = Path(path)
    path.write_text(format_config(reference_config()), encoding="utf-8")
    logger.info(f"Configuration de référence écrite dans {path}")
    return path
