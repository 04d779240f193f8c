# Named more_typing so it does not shadow the standard library's `typing`.
from typing import TypeVar

T_RECEIVABLE = TypeVar("T_RECEIVABLE")
"""Item type of a memory channel feeding a Task."""
