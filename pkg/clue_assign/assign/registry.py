"""Assigner registry: names to callables sharing one ``(scene, cfg)`` signature."""

import enum
from collections.abc import Callable

from ..error.exceptions import UnknownAssignerError
from .baselines import assign_atss, assign_center_distance, assign_iou_max
from .mcss import assign_mcss
from .scene import AssignConfig, Assignment, Scene

Assigner = Callable[[Scene, AssignConfig], Assignment]


class AssignerName(enum.StrEnum):
    """Registered assigner names."""

    MCSS = "mcss"
    IOU_MAX = "iou_max"
    CENTER = "center"
    ATSS = "atss"


def _iou_max(scene: Scene, cfg: AssignConfig) -> Assignment:
    return assign_iou_max(scene, cfg.iou_pos_thresh, cfg.iou_neg_thresh)


def _center(scene: Scene, cfg: AssignConfig) -> Assignment:
    return assign_center_distance(scene, cfg.radius_factor)


def _atss(scene: Scene, cfg: AssignConfig) -> Assignment:
    return assign_atss(scene, cfg.k)


ASSIGNERS: dict[AssignerName, Assigner] = {
    AssignerName.MCSS: assign_mcss,
    AssignerName.IOU_MAX: _iou_max,
    AssignerName.CENTER: _center,
    AssignerName.ATSS: _atss,
}


def available_assigners() -> list[str]:
    """Registered names in declaration order."""
    return [name.value for name in AssignerName]


def get_assigner(name: str | AssignerName) -> Assigner:
    """Look up an assigner by name.

    Raises:
        UnknownAssignerError: If the name is not registered; the message lists the
            valid names

    Example:
        >>> get_assigner("mcss") is assign_mcss
        True
    """
    try:
        return ASSIGNERS[AssignerName(name)]
    except ValueError:
        valid = ", ".join(available_assigners())
        raise UnknownAssignerError(f"unknown assigner '{name}'; valid names: {valid}", assigner=str(name)) from None
