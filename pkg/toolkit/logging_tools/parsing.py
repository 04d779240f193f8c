__all__ = ["parse_validation_error"]

from pprint import pformat

from pydantic import ValidationError


def parse_validation_error(ex: ValidationError, section: str | None = None) -> str:
    """
    A one-line-per-error rendering of a ValidationError for the command line, every location prefixed by the config
    section it came from.
    """
    errors = ex.errors()
    prefix = f"{section}." if section else ""
    msg = f"Configuration validation error{f' in section [{section}]' if section else ''}\n"
    msg += "\n".join(f"{prefix}{'.'.join(str(loc) for loc in e['loc'])} - {e['msg']}" for e in errors)
    msg += "\nInput: " + pformat(errors[0]["input"])
    return msg
