"""Versioned prompt template assets; loaded via importlib.resources."""

from importlib import resources


def load_template(name: str) -> str:
    return resources.files(__package__).joinpath(name).read_text(encoding="utf-8")
