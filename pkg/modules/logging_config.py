import logging
import os
from logging.handlers import RotatingFileHandler
from pathlib import Path
from zipfile import ZipFile
from datetime import datetime


LOG_DIR_ENV = "MEANDIM_LOG_DIR"
LOG_LEVEL_ENV = "MEANDIM_LOG_LEVEL"
ROTATED_SLOTS = 5

log_folder = Path(os.getenv(LOG_DIR_ENV, Path(__file__).resolve().parent.parent / "logs"))
log_folder.mkdir(parents=True, exist_ok=True)
main_log_file = log_folder / "meandim.log"

logger = logging.getLogger("meandim")
logger.setLevel(logging.DEBUG)
logger.propagate = False

formatter = logging.Formatter(
    "%(asctime)s [%(levelname)s] [%(name)s:%(module)s] %(message)s"
)


def rotated_paths(active: Path) -> list:
    return [active.parent / f"{active.stem}{i}{active.suffix}" for i in range(1, ROTATED_SLOTS + 1)]


class CustomRotatingFileHandler(RotatingFileHandler):
    """Rotates meandim.log into meandim1.log .. meandim5.log; a full set is
    zipped into an archive of run logs and removed."""

    def doRollover(self):
        if self.stream:
            self.stream.close()
            self.stream = None

        active = Path(self.baseFilename)
        slots = rotated_paths(active)
        free = next((p for p in slots if not p.exists()), None)
        if free is not None and active.exists():
            active.rename(free)

        self.stream = self._open()

        if all(p.exists() for p in slots):
            archive = self.archive_name(active)
            with ZipFile(archive, "w") as zipf:
                for p in slots:
                    zipf.write(p, arcname=p.name)
                    p.unlink()
            logger.info("Archived %d rotated run logs into %s", len(slots), archive.name)

    @staticmethod
    def archive_name(active: Path) -> Path:
        timestamp = datetime.now().strftime("%Y%m%d_%H%M%S")
        return active.parent / f"MeanDim_Runs_{timestamp}.zip"


def _level_from_env(default: int = logging.INFO) -> int:
    name = os.getenv(LOG_LEVEL_ENV, "").strip().upper()
    return getattr(logging, name, default) if name else default


def set_console_level(level) -> None:
    """Adjust what reaches stderr; the run log always keeps DEBUG."""
    if isinstance(level, str):
        level = getattr(logging, level.upper(), logging.INFO)
    console_handler.setLevel(level)


file_handler = CustomRotatingFileHandler(
    main_log_file,
    maxBytes=5_000_000,
    backupCount=ROTATED_SLOTS
)
file_handler.setFormatter(formatter)
file_handler.setLevel(logging.DEBUG)

# stderr keeps stdout artefacts clean
console_handler = logging.StreamHandler()
console_handler.setFormatter(formatter)
console_handler.setLevel(_level_from_env())

if not logger.handlers:
    logger.addHandler(file_handler)
    logger.addHandler(console_handler)

logger.debug("Logger initialized at %s", main_log_file)
