"""Device capability catalog loaded from the JSON manifest.

The catalog is data, not code: functions, options, the physical layout map
and the fault table all come from one human-editable manifest so the option
set can be swapped without touching the engine.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any

FUNCTIONS = ("copy", "scan", "fax", "email")


class ManifestError(ValueError):
    """Raised when a manifest fails schema or invariant checks at load time."""


@dataclass(frozen=True)
class OptionSpec:
    id: str
    functions: tuple[str, ...]
    type: str  # "enum" | "int" | "string"
    default: Any
    conversational: bool
    description: str
    values: tuple[str, ...] = ()  # enum only
    min: int | None = None  # int only
    max: int | None = None

    def value_count(self) -> int:
        """Selectable values this option contributes per applicable function.

        Enums count one per value; an int range or free-form entry counts as
        a single keyed-in selection.
        """
        return len(self.values) if self.type == "enum" else 1

    def domain_text(self) -> str:
        if self.type == "enum":
            return " | ".join(self.values)
        if self.type == "int":
            return f"{self.min}..{self.max}"
        return "free text"

    def allows(self, value: Any) -> bool:
        if self.type == "enum":
            return value in self.values
        if self.type == "int":
            return isinstance(value, int) and not isinstance(value, bool) and self.min <= value <= self.max
        return isinstance(value, str) and value != ""


@dataclass(frozen=True)
class FaultSpec:
    code: str
    blocks: tuple[str, ...]
    detail: str
    meaning: str
    blocks_when_stapling: bool = False


@dataclass
class OptionCatalog:
    functions: tuple[str, ...]
    options: list[OptionSpec]
    layout: dict[str, str]
    faults: dict[str, FaultSpec]
    _by_id: dict[str, OptionSpec] = field(default_factory=dict, repr=False)

    def __post_init__(self) -> None:
        self._by_id = {o.id: o for o in self.options}

    def option(self, option_id: str) -> OptionSpec | None:
        return self._by_id.get(option_id)

    def options_for(self, function: str | None = None) -> list[OptionSpec]:
        """Specs applicable to one function (or all), in manifest order."""
        if function is None or function == "all":
            return list(self.options)
        return [o for o in self.options if function in o.functions]

    def conversational_slots(self) -> list[OptionSpec]:
        return [o for o in self.options if o.conversational]

    def total_value_count(self) -> int:
        """Selectable values summed across every (function, option) pairing."""
        return sum(o.value_count() * len(o.functions) for o in self.options)

    def conversational_value_count(self) -> int:
        return sum(o.value_count() * len(o.functions) for o in self.options if o.conversational)

    def defaults_for(self, function: str) -> dict[str, Any]:
        return {
            o.id: o.default
            for o in self.options_for(function)
            if o.default not in (None, "")  # empty string means "not set"
        }


def _load_manifest_dict(path: str | Path | None) -> dict:
    if path is None:
        text = resources.files("mfp_agent.data").joinpath("device_manifest.json").read_text("utf-8")
    else:
        text = Path(path).read_text("utf-8")
    return json.loads(text)


def load_catalog(path: str | Path | None = None) -> OptionCatalog:
    """Load and validate the device manifest; raises ManifestError on defects."""
    raw = _load_manifest_dict(path)
    problems: list[str] = []

    functions = tuple(raw.get("functions", ()))
    if "print" in functions:
        problems.append("'print' must not be an offered function")

    options = []
    for o in raw.get("options", ()):
        spec = OptionSpec(
            id=o["id"],
            functions=tuple(o["functions"]),
            type=o["type"],
            default=o.get("default"),
            conversational=bool(o.get("conversational", False)),
            description=o.get("description", ""),
            values=tuple(o.get("values", ())),
            min=o.get("min"),
            max=o.get("max"),
        )
        if not spec.description:
            problems.append(f"option '{spec.id}' has no description")
        if spec.type == "enum" and not spec.values:
            problems.append(f"enum option '{spec.id}' has no values")
        if spec.type == "int" and (spec.min is None or spec.max is None):
            problems.append(f"int option '{spec.id}' is missing min/max")
        unknown = set(spec.functions) - set(functions)
        if unknown:
            problems.append(f"option '{spec.id}' names unknown functions {sorted(unknown)}")
        options.append(spec)

    ids = [o.id for o in options]
    for dup in {i for i in ids if ids.count(i) > 1}:
        problems.append(f"duplicate option id '{dup}'")

    faults = {}
    for f in raw.get("faults", ()):
        faults[f["code"]] = FaultSpec(
            code=f["code"],
            blocks=tuple(f.get("blocks", ())),
            detail=f.get("detail", ""),
            meaning=f.get("meaning", ""),
            blocks_when_stapling=bool(f.get("blocks_when_stapling", False)),
        )
        if not faults[f["code"]].detail:
            problems.append(f"fault '{f['code']}' has no detail prose")

    catalog = OptionCatalog(
        functions=functions,
        options=options,
        layout=dict(raw.get("layout", {})),
        faults=faults,
    )

    if catalog.total_value_count() < 90:
        problems.append(
            f"catalog offers {catalog.total_value_count()} selectable values; need >= 90"
        )
    if catalog.conversational_value_count() < 45:
        problems.append(
            f"only {catalog.conversational_value_count()} values are conversational; need >= 45"
        )

    if problems:
        raise ManifestError("; ".join(problems))
    return catalog
