"""Celery tasks for distributed pair preparation."""

import logging

from celery import shared_task

from .services import PairPreparationService, PreparationOptions

logger = logging.getLogger(__name__)


@shared_task(name="apps.pairing.tasks.prepare_scene_task")
def prepare_scene_task(scene_dir: str, manifest_dir: str, options: dict) -> dict:
    """Prepare one scene and return its records as plain data."""
    result = PairPreparationService.prepare_scene(
        scene_dir, manifest_dir, PreparationOptions(**options)
    )
    logger.info(
        "Scene %s: %d records, %d failures",
        result.scene_id,
        len(result.records),
        len(result.failures),
    )
    return result.to_dict()
