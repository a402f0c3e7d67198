"""
Contains typing classes.

NOTE: this module is not intended to be imported at runtime.

"""

from typing import Literal

import loggings

loggings.warning("this module is not intended to be imported at runtime")

RegularizerName = Literal[
    "scale",
    "io",
    "squared",
    "scale-dependent",
    "input-output",
    "squared-output",
    "ty",
    "xy",
    "yy",
]
ScenarioName = Literal["stationary", "nonstationary"]
ConfigFileFormat = Literal["yaml", "yml", "toml", "json"]
