import json
import logging
import os
from datetime import datetime
from typing import Optional

from app.core.config import settings


def setup_logging(level: Optional[str] = None, log_file: Optional[str] = None):
    """로깅 시스템을 설정합니다."""
    level = level or settings.LOG_LEVEL
    log_file = log_file or settings.LOG_FILE

    # 로그 디렉토리 생성
    log_dir = os.path.dirname(log_file)
    if log_dir and not os.path.exists(log_dir):
        os.makedirs(log_dir)

    log_format = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"
    date_format = "%Y-%m-%d %H:%M:%S"

    logging.basicConfig(
        level=getattr(logging, level.upper()),
        format=log_format,
        datefmt=date_format,
        handlers=[
            logging.StreamHandler(),
            logging.FileHandler(log_file, encoding="utf-8"),
        ],
        force=True,
    )

    logger = logging.getLogger(__name__)
    logger.info("로깅 시스템이 초기화되었습니다.")
    logger.info(f"로그 레벨: {level}")
    logger.info(f"로그 파일: {log_file}")


def log_study_event(event_type: str, study: str, details: Optional[dict] = None):
    """스터디 감사 로그를 JSON 한 줄로 기록합니다."""
    if not settings.AUDIT_LOG_ENABLED:
        return

    audit_logger = logging.getLogger("study_audit")
    audit_logger.setLevel(logging.INFO)
    audit_logger.propagate = False

    if not audit_logger.handlers:
        audit_file = settings.AUDIT_LOG_FILE
        audit_dir = os.path.dirname(audit_file)
        if audit_dir and not os.path.exists(audit_dir):
            os.makedirs(audit_dir)

        file_handler = logging.FileHandler(audit_file, encoding="utf-8")
        file_handler.setLevel(logging.INFO)
        audit_logger.addHandler(file_handler)

    audit_data = {
        "timestamp": datetime.now().isoformat(),
        "event_type": event_type,
        "study": study,
        "details": details or {},
    }

    audit_logger.info(json.dumps(audit_data, default=str, ensure_ascii=False))
