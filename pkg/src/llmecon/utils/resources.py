from functools import lru_cache
from pathlib import Path

import llmecon


@lru_cache(maxsize=1)
def get_project_root() -> Path:
    """Repository root holding templates/ and configs/ (src/llmecon -> src -> root)."""
    return Path(llmecon.__file__).resolve().parent.parent.parent


def resource_path(relative_path: str | Path) -> Path:
    """Resolve a path relative to the repository root; absolute paths pass through."""
    path = Path(relative_path)
    if path.is_absolute():
        return path
    return get_project_root() / path


def resolve_path(path: str | Path) -> Path:
    """Prefer `path` as given (absolute or relative to the working directory), else the repository root."""
    candidate = Path(path)
    if candidate.exists():
        return candidate
    return resource_path(candidate)
