from pydantic_settings import BaseSettings
import os


class Settings(BaseSettings):
    # 기본 설정
    PROJECT_NAME: str = "tfwave-lab"
    VERSION: str = "1.0.0"

    # 로깅 설정
    LOG_LEVEL: str = "INFO"
    LOG_FILE: str = "logs/tfwave.log"
    AUDIT_LOG_ENABLED: bool = True
    AUDIT_LOG_FILE: str = "logs/study_audit.log"

    # Mittag-Leffler 평가 설정
    ML_TOL: float = 1e-12
    ML_SERIES_RADIUS: float = 5.0
    ML_MAX_TERMS: int = 2000
    ML_ASYMPTOTIC_TERMS: int = 60
    ML_CERT_SLACK: float = 1e3
    ML_POSITIVE_MAX: float = 40.0

    # 솔버 설정
    SOLVER_MAX_STEPS: int = 2 ** 13
    SOLVER_OVERFLOW_GUARD: float = 1e12

    # 노이즈 설정
    FBM_DENSE_FALLBACK_MAX: int = 4096

    # FEM 설정
    FEM_MIN_TRUNCATION: int = 512
    FEM_TAIL_WARN_REL: float = 1e-10

    # 몬테카를로 설정
    MC_DEFAULT_SAMPLES: int = 2000
    MC_BATCH_SIZE: int = 16
    MC_ROUND_BATCHES: int = 4
    MC_STDERR_STOP: float = 0.05

    # 출력 설정
    OUTPUT_DIR: str = "out"

    # 안정성 프로브 상한
    STABILITY_BOUND: float = 25.0

    class Config:
        env_file = ".env"
        case_sensitive = True


# 전역 설정 인스턴스
settings = Settings()

# 환경별 설정 오버라이드
if os.getenv("ENVIRONMENT") == "production":
    settings.LOG_LEVEL = "WARNING"
