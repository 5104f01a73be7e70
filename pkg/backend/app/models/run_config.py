from enum import Enum
from pathlib import Path
from typing import List, Optional, Union

from pydantic import BaseModel, ConfigDict, Field, field_validator

from app.core.config import settings
from tfwave_core.model import (
    CoeffSequences,
    ModelSpec,
    NonlinearityKind,
    NonlinearitySpec,
    SequenceRule,
    initial_profile,
)
from tfwave_core.utils import parse_float_list, read_config_file


class StudyName(str, Enum):
    """실행 가능한 스터디"""
    MODELING_ERROR = "modeling-error"
    FEM_ERROR = "fem-error"
    TOTAL_ERROR = "total-error"
    HOLDER = "holder"
    STABILITY = "stability"
    SPECIAL_SELFTEST = "special-selftest"


class BandMetric(str, Enum):
    """판정 대상 지표"""
    FITTED_RATE = "fitted_rate"
    LOG_CORRECTED_RATE = "log_corrected_rate"
    FLATTENING_RATIO = "flattening_ratio"


class RunConfig(BaseModel):
    """key=value 설정 파일 스키마"""
    model_config = ConfigDict(extra="forbid", use_enum_values=False)

    study: StudyName = Field(..., description="실행할 스터디")

    # 모델 파라미터 (불변식 검증은 ModelSpec 이 담당)
    alpha: float = Field(1.8, description="시간 차수 α")
    beta: float = Field(0.9, description="공간 차수 β")
    nu: float = Field(1.0, description="템퍼링 계수 ν")
    hurst: float = Field(0.75, description="Hurst 지수 H")
    domain_len: float = Field(1.0, description="영역 길이 L")
    horizon: float = Field(1.0, description="최종 시간 T")
    n_modes: int = Field(32, description="스펙트럼 절단 K")
    init_a: str = Field("parabola", description="초기 변위 프로파일")
    init_b: str = Field("zero", description="초기 속도 프로파일")
    gamma_reg: float = Field(0.5, description="선언된 정칙성 지수 γ")

    f_kind: NonlinearityKind = NonlinearityKind.SINE_BOUNDED
    f_l: Optional[float] = Field(1.0, ge=0)
    f_c0: float = 0.0
    f_c1: float = 0.0
    g_kind: NonlinearityKind = NonlinearityKind.DIAGONAL_MULTIPLICATIVE
    g_l: Optional[float] = Field(None, ge=0, description="none 이면 K 에서 최소 상수를 유도")
    g_c0: float = 1.0
    g_c1: float = 1.0
    h_kind: NonlinearityKind = NonlinearityKind.DIAGONAL_MULTIPLICATIVE
    h_l: Optional[float] = Field(None, ge=0, description="none 이면 K 에서 최소 상수를 유도")
    h_c0: float = 1.0
    h_c1: float = 1.0

    # 노이즈 계수 수열
    sigma_decay: float = Field(1.0, gt=0)
    sigma_scale: float = 1.0
    sigma_modulation: float = 0.0
    sigma_perturbation: float = 0.0
    sigma_truncation: Optional[int] = Field(None, ge=0)
    rho_decay: float = Field(1.0, gt=0)
    rho_scale: float = 1.0
    rho_modulation: float = 0.0
    rho_perturbation: float = 0.0
    rho_truncation: Optional[int] = Field(None, ge=0)

    # 사다리 및 이산화
    tau_ladder: List[float] = Field(default_factory=list, description="시간 간격 사다리")
    ref_tau: Optional[float] = Field(None, gt=0, description="기준 해 시간 간격")
    h_ladder: List[float] = Field(default_factory=list, description="메쉬 간격 사다리")
    tau_fixed: Optional[float] = Field(None, gt=0)
    h_bar: Optional[float] = Field(None, gt=0)
    lag_set: List[float] = Field(default_factory=list, description="Hölder 지연 집합")
    holder_tau: Optional[float] = Field(None, gt=0)
    lam_betas: List[float] = Field(default_factory=lambda: [1.0, 1e2, 1e4])
    nus: List[float] = Field(default_factory=lambda: [0.0, 1.0, 5.0])
    sobolev_index: float = Field(0.0, description="오차 노름의 Sobolev 지수 s")

    # 몬테카를로
    n_samples: int = Field(default_factory=lambda: settings.MC_DEFAULT_SAMPLES, ge=1)
    master_seed: int = Field(0, ge=0)
    batch_size: Optional[int] = Field(None, ge=1)
    early_stop: bool = True

    # 판정 밴드
    band_metric: BandMetric = BandMetric.FITTED_RATE
    band_low: Optional[float] = None
    band_high: Optional[float] = None
    require_monotone: bool = False

    output: Optional[Path] = Field(None, description="출력 디렉토리")

    @field_validator("tau_ladder", "h_ladder", "lag_set", "lam_betas", "nus", mode="before")
    @classmethod
    def _split_list(cls, value):
        if isinstance(value, str):
            return parse_float_list(value)
        return value

    @field_validator("sigma_truncation", "rho_truncation", "ref_tau", "tau_fixed", "h_bar",
                     "holder_tau", "band_low", "band_high", "batch_size", "output",
                     "f_l", "g_l", "h_l", mode="before")
    @classmethod
    def _none_literal(cls, value):
        if isinstance(value, str) and value.strip().lower() in ("", "none"):
            return None
        if isinstance(value, str) and "^" in value:
            return parse_float_list(value)[0]
        return value

    @classmethod
    def from_file(cls, path: Union[str, Path]) -> "RunConfig":
        """설정 파일을 읽어 검증합니다. 알 수 없는 키는 줄 번호와 함께 거부됩니다."""
        return cls.model_validate(read_config_file(path, allowed_keys=list(cls.model_fields)))

    def _nonlinearity(self, prefix: str) -> NonlinearitySpec:
        kind = NonlinearityKind(getattr(self, f"{prefix}_kind"))
        l = getattr(self, f"{prefix}_l")
        c0 = getattr(self, f"{prefix}_c0")
        c1 = getattr(self, f"{prefix}_c1")
        if kind == NonlinearityKind.ZERO:
            return NonlinearitySpec.zero()
        if kind == NonlinearityKind.SINE_BOUNDED:
            return NonlinearitySpec.sine_bounded(l)
        return NonlinearitySpec(kind, l, c0, c1)

    def _rule(self, prefix: str) -> SequenceRule:
        return SequenceRule(
            decay=getattr(self, f"{prefix}_decay"),
            scale=getattr(self, f"{prefix}_scale"),
            modulation=getattr(self, f"{prefix}_modulation"),
            perturbation=getattr(self, f"{prefix}_perturbation"),
            truncation=getattr(self, f"{prefix}_truncation"),
        )

    def to_model(self) -> ModelSpec:
        """ModelSpec 생성 (불변식 위반 시 ModelValidationError)"""
        return ModelSpec(
            alpha=self.alpha,
            beta=self.beta,
            nu=self.nu,
            hurst=self.hurst,
            domain_len=self.domain_len,
            horizon=self.horizon,
            n_modes=self.n_modes,
            init_a=initial_profile(self.init_a, self.n_modes, self.domain_len),
            init_b=initial_profile(self.init_b, self.n_modes, self.domain_len),
            f_spec=self._nonlinearity("f"),
            g_spec=self._nonlinearity("g"),
            h_spec=self._nonlinearity("h"),
            noise_coeffs=CoeffSequences(sigma=self._rule("sigma"), rho=self._rule("rho")),
            gamma_reg=self.gamma_reg,
        )
