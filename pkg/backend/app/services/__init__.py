"""
tfwave-lab 서비스 패키지

핵심 서비스들:
- StudyErrorHandler: 예외 분류 및 종료 코드 결정
- run_study: 스터디 실행과 밴드 판정
- run_selftest: Mittag-Leffler / 분수 미적분 자체 점검
"""

from .error_handler import StudyErrorHandler
from .selftest import run_selftest
from .study_runner import run_study

__all__ = [
    'StudyErrorHandler',
    'run_selftest',
    'run_study',
]
