import json
import logging
import traceback
from datetime import datetime
from enum import Enum
from typing import Any, Dict, Optional

from pydantic import ValidationError

from tfwave_core import errors as core_errors

logger = logging.getLogger(__name__)

EXIT_PASS = 0
EXIT_ERROR = 1
EXIT_FAIL = 2


class ErrorSeverity(Enum):
    """에러 심각도 등급"""
    LOW = "low"           # 경고, 결과는 유효
    MEDIUM = "medium"     # 설정 수정 후 재실행
    HIGH = "high"         # 수치 실패, 스터디 중단
    CRITICAL = "critical" # 치명적, 시스템 오류


class ErrorCategory(Enum):
    """에러 카테고리"""
    CONFIG = "config"           # 설정 파일 관련
    VALIDATION = "validation"   # 모델 불변식 위반
    NUMERICAL = "numerical"     # 수치 계산 실패
    IO = "io"                   # 파일 입출력
    SYSTEM = "system"           # 시스템 관련


class StudyErrorHandler:
    """
    스터디 실행 에러 핸들링 시스템

    라이브러리와 CLI 에서 발생한 예외를 분류하고,
    사용자 메시지와 종료 코드를 결정합니다.
    """

    def __init__(self):
        self.strategies = self._initialize_strategies()
        logger.debug("스터디 에러 핸들링 시스템 초기화 완료")

    def _initialize_strategies(self) -> Dict[str, Dict]:
        """분류 전략 초기화"""
        return {
            "config_parse": {
                "severity": ErrorSeverity.MEDIUM,
                "category": ErrorCategory.CONFIG,
                "user_message": "설정 파일을 해석할 수 없습니다.",
                "recovery_steps": ["표시된 줄 번호의 key=value 형식과 키 이름을 확인해주세요."],
            },
            "invariant": {
                "severity": ErrorSeverity.MEDIUM,
                "category": ErrorCategory.VALIDATION,
                "user_message": "모델 불변식이 위반되었습니다.",
                "recovery_steps": ["메시지에 표시된 불변식을 만족하도록 파라미터를 수정해주세요."],
            },
            "ladder": {
                "severity": ErrorSeverity.MEDIUM,
                "category": ErrorCategory.VALIDATION,
                "user_message": "세분화 사다리가 유효하지 않습니다.",
                "recovery_steps": [
                    "사다리는 이진(dyadic) 간격이어야 합니다.",
                    "FEM 스터디는 K >= 4M 을 만족해야 합니다.",
                ],
            },
            "numerical": {
                "severity": ErrorSeverity.HIGH,
                "category": ErrorCategory.NUMERICAL,
                "user_message": "수치 계산이 허용 오차를 보장하지 못했습니다.",
                "recovery_steps": ["시간 간격을 줄이거나 허용 오차를 완화해주세요."],
            },
            "io": {
                "severity": ErrorSeverity.HIGH,
                "category": ErrorCategory.IO,
                "user_message": "파일을 읽거나 쓸 수 없습니다.",
                "recovery_steps": ["경로와 권한을 확인해주세요."],
            },
            "system_error": {
                "severity": ErrorSeverity.CRITICAL,
                "category": ErrorCategory.SYSTEM,
                "user_message": "시스템 오류가 발생했습니다.",
                "recovery_steps": ["로그 파일의 traceback 을 확인해주세요."],
            },
        }

    def _classify(self, error: Exception) -> str:
        if isinstance(error, (core_errors.ConfigParseError, ValidationError)):
            return "config_parse"
        if isinstance(error, (core_errors.DegenerateLadderError, core_errors.ReferenceResolutionError,
                              core_errors.DivisibilityError, core_errors.GridMismatchError)):
            return "ladder"
        if isinstance(error, (core_errors.ModelValidationError, core_errors.UnknownNonlinearityError,
                              core_errors.NonlinearityMismatchError, core_errors.InsufficientPointsError,
                              core_errors.GammaPoleError)):
            return "invariant"
        if isinstance(error, core_errors.TfwaveError):
            return "numerical"
        if isinstance(error, OSError):
            return "io"
        return "system_error"

    def handle_error(self, error: Exception, context: Optional[Dict[str, Any]] = None) -> Dict[str, Any]:
        """
        에러 처리 및 종료 코드 결정

        Args:
            error: 발생한 에러 객체
            context: 에러 발생 컨텍스트 정보 (스터디 이름, 설정 경로 등)

        Returns:
            에러 응답 (exit_code 포함)
        """
        try:
            error_info = self._extract_error_info(error, context)
            self._log_error(error_info)
            strategy = self.strategies[error_info["category"]]
            return {
                "error_id": error_info["error_id"],
                "timestamp": error_info["timestamp"],
                "severity": strategy["severity"].value,
                "category": strategy["category"].value,
                "user_message": f"{strategy['user_message']} {error_info['error_message']}",
                "recovery_steps": strategy["recovery_steps"],
                "exit_code": EXIT_ERROR,
            }
        except Exception as e:
            logger.error(f"에러 처리 중 추가 오류 발생: {str(e)}")
            return self._create_fallback_error_response(str(e))

    def _extract_error_info(self, error: Exception, context: Optional[Dict[str, Any]] = None) -> Dict[str, Any]:
        """에러 정보 추출"""
        info = {
            "error_id": f"ERR_{datetime.now().strftime('%Y%m%d_%H%M%S')}_{id(error)}",
            "timestamp": datetime.now().isoformat(),
            "error_type": type(error).__name__,
            "error_message": self._message(error),
            "traceback": traceback.format_exc(),
            "context": context or {},
            "category": self._classify(error),
        }
        if isinstance(error, core_errors.ConfigParseError):
            info["line_number"] = error.line_number
            info["key"] = error.key
        if isinstance(error, core_errors.MittagLefflerConvergenceError):
            info["achieved_error"] = error.achieved_error
        if isinstance(error, core_errors.SolverOverflowError):
            info["step"] = error.step
            info["mode"] = error.mode
        return info

    @staticmethod
    def _message(error: Exception) -> str:
        if isinstance(error, ValidationError):
            parts = []
            for item in error.errors():
                loc = ".".join(str(p) for p in item["loc"])
                if item["type"] == "extra_forbidden":
                    parts.append(f"unknown key '{loc}'")
                else:
                    parts.append(f"{loc}: {item['msg']}")
            return "; ".join(parts)
        return str(error)

    def _log_error(self, error_info: Dict[str, Any]):
        """에러 로깅"""
        log_entry = {
            "timestamp": error_info["timestamp"],
            "error_id": error_info["error_id"],
            "category": error_info["category"],
            "message": error_info["error_message"],
            "context": error_info["context"],
        }
        logger.error(f"스터디 에러 발생: {json.dumps(log_entry, ensure_ascii=False, default=str)}")

    def _create_fallback_error_response(self, error_message: str) -> Dict[str, Any]:
        """폴백 에러 응답 생성"""
        return {
            "error_id": f"ERR_FALLBACK_{datetime.now().strftime('%Y%m%d_%H%M%S')}",
            "timestamp": datetime.now().isoformat(),
            "severity": ErrorSeverity.CRITICAL.value,
            "category": ErrorCategory.SYSTEM.value,
            "user_message": "예상치 못한 오류가 발생했습니다.",
            "recovery_steps": [],
            "exit_code": EXIT_ERROR,
            "technical_details": f"폴백 에러 처리 실패: {error_message}",
        }
