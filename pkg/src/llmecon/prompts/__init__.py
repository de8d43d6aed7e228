"""Prompt protocols rendered from the templates/ directory."""

from .renderer import (
    SCHEMA_FIELDS,
    PromptError,
    PromptRenderer,
    RenderedPrompt,
    format_number,
    get_renderer,
    render_game,
    render_round_user,
    render_single_turn,
    render_system,
)

__all__ = [
    "SCHEMA_FIELDS",
    "PromptError",
    "PromptRenderer",
    "RenderedPrompt",
    "format_number",
    "get_renderer",
    "render_game",
    "render_round_user",
    "render_single_turn",
    "render_system",
]
