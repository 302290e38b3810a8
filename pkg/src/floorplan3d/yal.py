"""Reader for the MCNC YAL netlist format.

Only the subset that carries geometry and connectivity is understood:
MODULE / TYPE / DIMENSIONS / IOLIST / NETWORK / ENDMODULE.  Other
statements (CURRENT, VOLTAGE, PROFILE, PLACEMENT blocks, ...) are skipped.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from types import MappingProxyType
from typing import Mapping

__all__ = [
    "IoKind",
    "ModuleType",
    "Terminal",
    "YalModule",
    "Instance",
    "Netlist",
    "YalError",
    "YalSyntaxError",
    "UnknownModule",
    "MissingParent",
    "parse_yal",
    "read_yal",
    "block_instances",
]

_COMMENT = re.compile(r"/\*.*?\*/", re.DOTALL)


class ModuleType(str, Enum):
    STANDARD = "standard"
    GENERAL = "general"
    PARENT = "parent"
    PAD = "pad"


class IoKind(str, Enum):
    INPUT = "input"
    OUTPUT = "output"
    BIDIRECTIONAL = "bidirectional"
    UNKNOWN = "unknown"


_IO_KINDS = {
    "I": IoKind.INPUT,
    "PI": IoKind.INPUT,
    "O": IoKind.OUTPUT,
    "PO": IoKind.OUTPUT,
    "B": IoKind.BIDIRECTIONAL,
    "PB": IoKind.BIDIRECTIONAL,
}

PLACEABLE = frozenset({ModuleType.STANDARD, ModuleType.GENERAL})


class YalError(Exception):
    pass


class YalSyntaxError(YalError):
    def __init__(self, line: int, reason: str):
        super().__init__(f"line {line}: {reason}")
        self.line = line
        self.reason = reason


class UnknownModule(YalError):
    def __init__(self, instance: str, module_name: str):
        super().__init__(f"instance {instance!r} references undeclared module {module_name!r}")
        self.instance = instance
        self.module_name = module_name


class MissingParent(YalError):
    def __init__(self):
        super().__init__("no PARENT module with a NETWORK section")


@dataclass(frozen=True)
class Terminal:
    name: str
    x: float
    y: float
    io_kind: IoKind = IoKind.UNKNOWN


@dataclass(frozen=True)
class YalModule:
    name: str
    module_type: ModuleType
    width: float
    height: float
    terminals: tuple[Terminal, ...] = ()

    @property
    def placeable(self) -> bool:
        return self.module_type in PLACEABLE


@dataclass(frozen=True)
class Instance:
    name: str
    module: str
    signals: tuple[str, ...]


@dataclass(frozen=True)
class Netlist:
    modules: Mapping[str, YalModule]
    instances: tuple[Instance, ...]
    nets: Mapping[str, frozenset[str]]
    parent: str = ""

    def module_of(self, instance: str) -> YalModule:
        return self.modules[self._by_name[instance].module]

    @property
    def _by_name(self) -> dict[str, Instance]:
        return {inst.name: inst for inst in self.instances}


@dataclass
class _Statement:
    line: int
    tokens: list[str]


def _statements(text: str) -> list[_Statement]:
    # comments are blanked but newlines kept so line numbers stay right
    text = _COMMENT.sub(lambda m: "\n" * m.group(0).count("\n"), text)
    out: list[_Statement] = []
    line = 1
    start = None
    tokens: list[str] = []
    for chunk in re.split(r"(;|\s+)", text):
        if not chunk:
            continue
        if chunk == ";":
            out.append(_Statement(start if start is not None else line, tokens))
            tokens, start = [], None
        elif chunk.isspace():
            line += chunk.count("\n")
        else:
            if start is None:
                start = line
            tokens.append(chunk)
    if tokens:
        raise YalSyntaxError(start or line, f"unterminated statement starting with {tokens[0]!r}")
    return out


def _number(stmt: _Statement, tok: str) -> float:
    try:
        return float(tok)
    except ValueError:
        raise YalSyntaxError(stmt.line, f"expected a number, got {tok!r}") from None


@dataclass
class _ModuleDraft:
    name: str
    line: int
    module_type: ModuleType | None = None
    xs: list[float] = field(default_factory=list)
    ys: list[float] = field(default_factory=list)
    terminals: list[Terminal] = field(default_factory=list)
    network: list[tuple[int, Instance]] | None = None

    def finish(self) -> YalModule:
        if self.module_type is None:
            raise YalSyntaxError(self.line, f"module {self.name!r} has no TYPE")
        if self.xs:
            x0, y0 = min(self.xs), min(self.ys)
            width, height = max(self.xs) - x0, max(self.ys) - y0
        elif self.module_type is ModuleType.PARENT:
            x0 = y0 = width = height = 0.0
        else:
            raise YalSyntaxError(self.line, f"module {self.name!r} has no DIMENSIONS")
        terminals = tuple(Terminal(t.name, t.x - x0, t.y - y0, t.io_kind) for t in self.terminals)
        if self.module_type is not ModuleType.PARENT:
            if width <= 0 or height <= 0:
                raise YalSyntaxError(self.line, f"module {self.name!r} has a degenerate outline")
            for t in terminals:
                if not (0 <= t.x <= width and 0 <= t.y <= height):
                    raise YalSyntaxError(
                        self.line, f"terminal {t.name!r} of {self.name!r} lies outside the module outline"
                    )
        seen: set[str] = set()
        for t in terminals:
            if t.name in seen:
                raise YalSyntaxError(self.line, f"duplicate terminal {t.name!r} in module {self.name!r}")
            seen.add(t.name)
        return YalModule(self.name, self.module_type, width, height, terminals)


def parse_yal(text: str) -> Netlist:
    modules: dict[str, YalModule] = {}
    network: list[tuple[int, Instance]] | None = None
    parent = ""
    draft: _ModuleDraft | None = None
    section: str | None = None  # IOLIST, NETWORK, PLACEMENT or None

    for stmt in _statements(text):
        if not stmt.tokens:
            continue
        head = stmt.tokens[0]
        key = head.upper()

        if draft is None:
            if key != "MODULE":
                raise YalSyntaxError(stmt.line, f"expected MODULE, got {head!r}")
            if len(stmt.tokens) != 2:
                raise YalSyntaxError(stmt.line, "MODULE takes exactly one name")
            draft = _ModuleDraft(stmt.tokens[1], stmt.line)
            continue

        if section is not None:
            end = "END" + section
            if key == end:
                section = None
            elif section == "IOLIST":
                draft.terminals.append(_terminal(stmt))
            elif section == "NETWORK":
                if len(stmt.tokens) < 2:
                    raise YalSyntaxError(stmt.line, "NETWORK entry needs an instance and a module name")
                inst = Instance(stmt.tokens[0], stmt.tokens[1], tuple(stmt.tokens[2:]))
                assert draft.network is not None
                draft.network.append((stmt.line, inst))
            continue

        if key == "TYPE":
            if len(stmt.tokens) != 2:
                raise YalSyntaxError(stmt.line, "TYPE takes exactly one value")
            try:
                draft.module_type = ModuleType(stmt.tokens[1].lower())
            except ValueError:
                raise YalSyntaxError(stmt.line, f"unsupported module type {stmt.tokens[1]!r}") from None
        elif key == "DIMENSIONS":
            vals = [_number(stmt, t) for t in stmt.tokens[1:]]
            if not vals or len(vals) % 2:
                raise YalSyntaxError(stmt.line, "DIMENSIONS needs an even, non-zero number of coordinates")
            draft.xs, draft.ys = vals[0::2], vals[1::2]
        elif key in ("IOLIST", "PLACEMENT"):
            section = key
        elif key == "NETWORK":
            section = key
            draft.network = []
        elif key == "ENDMODULE":
            if draft.name in modules:
                raise YalSyntaxError(stmt.line, f"module {draft.name!r} declared twice")
            mod = draft.finish()
            modules[mod.name] = mod
            if draft.network is not None:
                if network is not None:
                    raise YalSyntaxError(stmt.line, "more than one NETWORK section")
                network, parent = draft.network, mod.name
            draft = None
        elif key == "MODULE":
            raise YalSyntaxError(stmt.line, f"MODULE inside module {draft.name!r} (missing ENDMODULE?)")
        # anything else (CURRENT, VOLTAGE, PROFILE, ...) is ignored

    if draft is not None:
        raise YalSyntaxError(draft.line, f"module {draft.name!r} is missing ENDMODULE")
    if network is None:
        raise MissingParent()

    nets: dict[str, set[str]] = {}
    names: set[str] = set()
    for line, inst in network:
        if inst.module not in modules:
            raise UnknownModule(inst.name, inst.module)
        if inst.name in names:
            raise YalSyntaxError(line, f"instance {inst.name!r} declared twice")
        names.add(inst.name)
        for sig in inst.signals:
            nets.setdefault(sig, set()).add(inst.name)

    return Netlist(
        modules=MappingProxyType(modules),
        instances=tuple(inst for _, inst in network),
        nets=MappingProxyType({s: frozenset(m) for s, m in nets.items()}),
        parent=parent,
    )


def _terminal(stmt: _Statement) -> Terminal:
    toks = stmt.tokens
    if len(toks) < 4:
        raise YalSyntaxError(stmt.line, "IOLIST entry needs name, type, x and y")
    kind = _IO_KINDS.get(toks[1].upper(), IoKind.UNKNOWN)
    return Terminal(toks[0], _number(stmt, toks[2]), _number(stmt, toks[3]), kind)


def read_yal(path: str | Path) -> Netlist:
    return parse_yal(Path(path).read_text())


def block_instances(netlist: Netlist) -> list[str]:
    """Names of placeable (non-pad, non-parent) instances in declaration order."""
    return [i.name for i in netlist.instances if netlist.modules[i.module].placeable]
