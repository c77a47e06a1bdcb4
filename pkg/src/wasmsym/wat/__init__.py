"""Text-format frontend: parse, validate and link the supported Wasm subset."""

from wasmsym.wat.ast import Export, Func, FuncType, Global, Import, Instr, MemoryDecl, Module
from wasmsym.wat.link import Instance, link
from wasmsym.wat.parser import parse_module
from wasmsym.wat.printer import print_module
from wasmsym.wat.validate import ValidatedModule, validate

__all__ = [
    "Module", "Func", "FuncType", "Instr", "Global", "Import", "Export", "MemoryDecl",
    "parse_module", "print_module", "validate", "ValidatedModule", "link", "Instance",
]
