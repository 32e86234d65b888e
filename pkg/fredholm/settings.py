import json
import logging
import os
from enum import Enum
from pathlib import Path
from typing import Any, Dict

"""
Fredholm can be configured using either environment variables or a json file

Configurations from environment variables supersede configurations from the JSON file.

### Environment variables
```
export FREDHOLM_DEBUG="0"
export FREDHOLM_RANK_TOL="1e-10"
export FREDHOLM_ROOT_TOL="1e-5"
export FREDHOLM_UNIT_ROOT_TOL="1e-8"
export FREDHOLM_CONTOUR_NODES="256"
export FREDHOLM_COMPLEMENTS="orthogonal"
```

### JSON

# $HOME/.config/fredholm/settings.json
```
{
    "FREDHOLM_DEBUG": "0",
    "FREDHOLM_RANK_TOL": "1e-10",
    "FREDHOLM_CONTOUR_NODES": "256"
}
```
"""

home_dir = Path.home()

config_dir = Path(os.getenv("XDG_CONFIG_HOME", default=home_dir / ".config")) / "fredholm"

settings_file = config_dir / "settings.json"


def load_settings_dict() -> Dict[str, Any]:
    settings_dict = dict()
    if settings_file.exists():
        try:
            with open(settings_file, "r") as settings_file_data:
                settings_dict = json.load(settings_file_data)
            assert isinstance(
                settings_dict, dict
            ), "settings.json should contain a dictionary"
        except FileNotFoundError as e:
            print(f"{settings_file} not found : FileNotFoundError {e}")
        except json.JSONDecodeError as e:
            print(f"Error decoding {settings_file}: JSONDecodeError {e}")
    return settings_dict


def get_setting(key: str, default=None):
    """Gets a setting from either environment variables or settings.json

    Settings from environment variables take precedence over settings.json

    Args:
        key (str): Key value
        default: The default setting value. Defaults to None.

    Returns:
        The setting value
    """
    value_from_environment = os.getenv(key)
    value_from_file = load_settings_dict().get(key)
    if value_from_environment is not None:
        return value_from_environment
    else:
        if value_from_file is not None:
            return value_from_file
        return default


def set_setting(key: str, value):
    """Sets a setting in the settings.json file.

    The config directory is created on first write.

    Args:
        key (str): The key to set.
        value: The value to set.
    """
    settings = load_settings_dict()
    settings[key] = value
    os.makedirs(settings_file.parent, exist_ok=True)
    with open(settings_file, "w") as settings_file_data:
        json.dump(settings, settings_file_data, indent=4)


def get_number(key: str, default: str, kind=float):
    """Gets a numeric setting, falling back to default if it does not parse

    Args:
        key (str): Key value
        default (str): The default setting value
        kind: float or int

    Returns:
        The parsed setting value
    """
    value = get_setting(key, default)
    try:
        return kind(value)
    except (TypeError, ValueError):
        logging.getLogger("fredholm").warning(
            f"Invalid value {value!r} for {key}, using {default}"
        )
        return kind(default)


TRUE_VALUES = ["1", "TRUE", "True", "true", 1, True]


debug = get_setting("FREDHOLM_DEBUG") in TRUE_VALUES

# Relative tolerance for rank and invertibility decisions during pole
# classification: sigma is treated as zero when sigma <= rank_tol * sigma_max.
rank_tol = get_number("FREDHOLM_RANK_TOL", "1e-10")

# Roots of det A(z) closer than this are clustered into one root.
# A Jordan chain of length m splits its eigenvalues at about eps ** (1 / m).
root_tol = get_number("FREDHOLM_ROOT_TOL", "1e-5")

# A cluster of roots is the root at 1 only if its mean is this close to 1.
unit_root_tol = get_number("FREDHOLM_UNIT_ROOT_TOL", "1e-8")

contour_nodes = get_number("FREDHOLM_CONTOUR_NODES", "256", int)

vanish_tol = get_number("FREDHOLM_VANISH_TOL", "1e-8")

verify_tol = get_number("FREDHOLM_VERIFY_TOL", "1e-7")

ma_tail_tol = get_number("FREDHOLM_MA_TAIL_TOL", "1e-12")

ma_cap = get_number("FREDHOLM_MA_CAP", "10000", int)


class ComplementMode(Enum):
    ORTHOGONAL = 0
    SEEDED_RANDOM = 1
    EXPLICIT = 2


complement_mode_mapping = {
    "ORTHOGONAL": ComplementMode.ORTHOGONAL,
    "RANDOM": ComplementMode.SEEDED_RANDOM,
    "SEEDED_RANDOM": ComplementMode.SEEDED_RANDOM,
}


def get_complement_mode() -> ComplementMode:
    """The default complement mode, orthogonal if the setting is unknown"""
    value = str(get_setting("FREDHOLM_COMPLEMENTS", default="orthogonal"))
    if value.upper() not in complement_mode_mapping:
        logging.getLogger("fredholm").warning(
            f"Invalid value {value!r} for FREDHOLM_COMPLEMENTS, using orthogonal"
        )
        return ComplementMode.ORTHOGONAL
    return complement_mode_mapping[value.upper()]


complement_mode = get_complement_mode()


fredholm_about_text = (
    "Fredholm inverts holomorphic matrix pencils around an isolated "
    + "singularity and applies the Laurent expansion to I(1) and I(2) "
    + "autoregressive processes."
)
