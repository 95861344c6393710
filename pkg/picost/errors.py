"""Exception hierarchy shared by the workbench modules"""

from typing import Optional


class PicostError(Exception):
    """Base class for every error the workbench reports"""


class SyntaxIssue(PicostError):
    """Parse error carrying the source position"""

    def __init__(self, message: str, line: Optional[int] = None, column: Optional[int] = None):
        self.line = line
        self.column = column
        where = f" at line {line}, column {column}" if line is not None else ""
        super().__init__(f"{message}{where}")


class UnboundIdentifier(SyntaxIssue):
    """Reference to a definition, variable or recursion variable that is not in scope"""


class EnvError(PicostError):
    """Unknown owner or resource, duplicate registration, or an invalid environment document"""


class ScenarioError(PicostError):
    """Unknown scenario id or invalid scenario parameter"""


class WitnessError(PicostError):
    """Witness family that cannot be instantiated"""
