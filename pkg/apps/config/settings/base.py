"""Base Django settings for the raw image pipeline."""

from pathlib import Path

import environ

env = environ.Env()

# Build paths inside the project like this: BASE_DIR / 'subdir'.
BASE_DIR = Path(__file__).resolve().parent.parent.parent.parent

SECRET_KEY = env("DJANGO_SECRET_KEY", default="django-insecure-change-me")

DEBUG = env.bool("DEBUG", default=False)

ALLOWED_HOSTS = env.list("ALLOWED_HOSTS", default=[])

# Application definition
DJANGO_APPS = [
    "django.contrib.contenttypes",
]

THIRD_PARTY_APPS = [
    "rest_framework",
]

LOCAL_APPS = [
    "apps.core",
    "apps.color",
    "apps.demosaic",
    "apps.pairing",
    "apps.devproxy",
    "apps.metrics",
    "apps.networks",
]

INSTALLED_APPS = DJANGO_APPS + THIRD_PARTY_APPS + LOCAL_APPS

MIDDLEWARE: list[str] = []

# No models; the database only satisfies Django's startup checks.
DATABASES = {
    "default": env.db("DATABASE_URL", default=f"sqlite:///{BASE_DIR}/db.sqlite3")
}

# Internationalization
LANGUAGE_CODE = "en-us"
TIME_ZONE = "UTC"
USE_I18N = False
USE_TZ = True

DEFAULT_AUTO_FIELD = "django.db.models.BigAutoField"

# Data locations
RAW_DATA_ROOT = Path(env("RAW_DATA_ROOT", default=str(BASE_DIR / "data")))
CHECKPOINT_DIR = Path(env("CHECKPOINT_DIR", default=str(BASE_DIR / "checkpoints")))

# Pair preparation
ALIGN_MAX_SHIFT = env.int("ALIGN_MAX_SHIFT", default=128)
ALIGN_DISCARD_THRESHOLD = env.float("ALIGN_DISCARD_THRESHOLD", default=0.035)
ALIGN_MIN_OVERLAP = env.int("ALIGN_MIN_OVERLAP", default=64)
MASK_L1_THRESHOLD = env.float("MASK_L1_THRESHOLD", default=0.4)
MASK_LOSS_PERCENTILE = env.float("MASK_LOSS_PERCENTILE", default=99.99)
MASK_OVEREXPOSURE_THRESHOLD = env.float("MASK_OVEREXPOSURE_THRESHOLD", default=0.99)
MASK_OPENING_SIZE = env.int("MASK_OPENING_SIZE", default=3)
PATCH_MAX_MASKED_FRACTION = env.float("PATCH_MAX_MASKED_FRACTION", default=0.5)
RGB_PATCH_SIZE = env.int("RGB_PATCH_SIZE", default=1024)
RGB_PATCH_STRIDE = env.int("RGB_PATCH_STRIDE", default=256)
BAYER_PATCH_SIZE = env.int("BAYER_PATCH_SIZE", default=512)
BAYER_PATCH_STRIDE = env.int("BAYER_PATCH_STRIDE", default=128)
RGB_CROP_SIZE = env.int("RGB_CROP_SIZE", default=256)
BAYER_CROP_SIZE = env.int("BAYER_CROP_SIZE", default=128)
PREPARE_USE_CELERY = env.bool("PREPARE_USE_CELERY", default=False)
PREPARE_MAX_FAILURE_FRACTION = env.float("PREPARE_MAX_FAILURE_FRACTION", default=0.5)

# Determinism and parallelism
PIPELINE_SEED = env.int("PIPELINE_SEED", default=0)
PIPELINE_THREADS = env.int("PIPELINE_THREADS", default=1)
TORCH_NUM_THREADS = env.int("TORCH_NUM_THREADS", default=1)

# Django REST Framework (serializers validate records and configs)
REST_FRAMEWORK = {
    "DEFAULT_RENDERER_CLASSES": [
        "rest_framework.renderers.JSONRenderer",
    ],
    "UNAUTHENTICATED_USER": None,
}

# Celery Configuration
CELERY_BROKER_URL = env("CELERY_BROKER_URL", default="redis://localhost:6379/1")
CELERY_RESULT_BACKEND = env("CELERY_RESULT_BACKEND", default="redis://localhost:6379/1")
CELERY_TASK_SERIALIZER = "json"
CELERY_RESULT_SERIALIZER = "json"
CELERY_ACCEPT_CONTENT = ["json"]
CELERY_TIMEZONE = TIME_ZONE
CELERY_ENABLE_UTC = True

# Logging
LOGGING = {
    "version": 1,
    "disable_existing_loggers": False,
    "formatters": {
        "verbose": {
            "format": (
                "{levelname} {asctime} {module} {process:d} {thread:d} {message}"
            ),
            "style": "{",
        },
        "simple": {
            "format": "{levelname} {message}",
            "style": "{",
        },
    },
    "handlers": {
        "console": {
            "class": "logging.StreamHandler",
            "formatter": "verbose",
        },
    },
    "root": {
        "handlers": ["console"],
        "level": "INFO",
    },
}
