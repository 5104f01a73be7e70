import logging
import math
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Optional, Tuple

from app.core.config import settings
from app.core.logging import log_study_event
from app.models.run_config import BandMetric, RunConfig, StudyName
from app.services.error_handler import EXIT_FAIL, EXIT_PASS
from app.services.selftest import run_selftest
from tfwave_core import experiments
from tfwave_core.errors import ModelValidationError
from tfwave_core.model import ModelSpec
from tfwave_core.utils import export_report, validate_ladder, write_frame, write_summary

logger = logging.getLogger(__name__)

PASS = "PASS"
FAIL = "FAIL"


@dataclass
class StudyOutcome:
    """스터디 실행 결과"""
    study: str
    verdict: str
    summary: Dict[str, Any] = field(default_factory=dict)
    files: Dict[str, Path] = field(default_factory=dict)

    @property
    def exit_code(self) -> int:
        return EXIT_PASS if self.verdict == PASS else EXIT_FAIL


def default_band(config: RunConfig, gamma_tilde: Tuple[float, float]) -> Tuple[Optional[float], Optional[float]]:
    """
    스터디별 기본 판정 밴드

    상한 정리는 단측 하한만 정당화하므로 상한은 이론값 + 0.5 의 점검용 상한입니다.
    """
    study = config.study
    if study == StudyName.MODELING_ERROR:
        return 1.7, 2.3
    if study == StudyName.FEM_ERROR:
        target = 4.0 * gamma_tilde[0]
        return target - 0.5, target + 0.5
    if study == StudyName.HOLDER:
        return 2.0 * config.alpha - 2.0 - 0.2, 2.5
    if study == StudyName.TOTAL_ERROR:
        return 0.5, 2.0
    return None, None


def _in_band(value: float, low: Optional[float], high: Optional[float]) -> bool:
    if value is None or not math.isfinite(value):
        return False
    return (low is None or value >= low) and (high is None or value <= high)


def _require_ladder(values, name: str) -> None:
    ok, problems = validate_ladder(values)
    if not ok:
        raise ModelValidationError(f"{name}: {'; '.join(problems)}")


def _run_ladder_study(config: RunConfig, model: ModelSpec, threads: int, seed: int) -> experiments.ErrorReport:
    stop_rel = settings.MC_STDERR_STOP if config.early_stop else None
    common = dict(
        s=config.sobolev_index, threads=threads, batch_size=config.batch_size, stop_rel=stop_rel,
    )
    if config.study == StudyName.MODELING_ERROR:
        _require_ladder(config.tau_ladder, "tau_ladder")
        return experiments.modeling_error_study(
            model, config.tau_ladder, config.n_samples, seed, ref_tau=config.ref_tau, **common
        )
    if config.study == StudyName.FEM_ERROR:
        _require_ladder(config.h_ladder, "h_ladder")
        if config.tau_fixed is None:
            raise ModelValidationError("fem-error needs tau_fixed")
        return experiments.fem_error_study(
            model, config.h_ladder, config.tau_fixed, config.n_samples, seed, **common
        )
    if config.study == StudyName.TOTAL_ERROR:
        _require_ladder(config.tau_ladder, "tau_ladder")
        if config.h_bar is None:
            raise ModelValidationError("total-error needs h_bar")
        return experiments.total_error_study(
            model, config.h_bar, config.tau_ladder, config.n_samples, seed, ref_tau=config.ref_tau, **common
        )
    _require_ladder(config.lag_set, "lag_set")
    return experiments.holder_probe(
        model, config.lag_set, config.n_samples, seed,
        tau=config.holder_tau, threads=threads, batch_size=config.batch_size,
    )


def _metric(report: experiments.ErrorReport, metric: BandMetric) -> float:
    if metric == BandMetric.FITTED_RATE:
        return report.fitted_rate
    value = report.extras.get(metric.value)
    return math.nan if value is None else float(value)


def run_study(
    config: RunConfig,
    *,
    threads: int = 1,
    out_dir: Optional[Path] = None,
    seed: Optional[int] = None,
) -> StudyOutcome:
    """
    설정된 스터디 실행, 보고서 저장, 밴드 판정

    Args:
        config: 검증된 실행 설정
        threads: 워커 스레드 수 (결과에 영향 없음)
        out_dir: 출력 디렉토리 (없으면 config.output, 그 다음 settings.OUTPUT_DIR)
        seed: 마스터 시드 재정의

    Returns:
        판정과 요약이 담긴 StudyOutcome
    """
    study = config.study.value
    seed = config.master_seed if seed is None else seed
    out_dir = Path(out_dir or config.output or settings.OUTPUT_DIR)
    started = time.perf_counter()
    log_study_event("study_started", study, {"seed": seed, "threads": threads, "out": str(out_dir)})
    logger.info(f"스터디 시작: {study} (seed={seed}, threads={threads})")

    # 계산 전에 모델 불변식 검증
    model = config.to_model()
    summary: Dict[str, Any] = {"master_seed": seed}

    if config.study == StudyName.SPECIAL_SELFTEST:
        result = run_selftest()
        verdict = PASS if result.passed else FAIL
        out_dir.mkdir(parents=True, exist_ok=True)
        summary.update({"verdict": verdict, "failed_checks": [c.name for c in result.checks if not c.passed]})
        files = {
            "results": write_frame(result.to_frame(), out_dir / f"{study}.csv"),
            "summary": write_summary(out_dir, study, summary),
        }

    elif config.study == StudyName.STABILITY:
        result = experiments.stability_probe(config.alpha, config.lam_betas, config.nus)
        verdict = PASS if result.passed else FAIL
        summary.update({
            "verdict": verdict,
            "max_C_T": max(result.constants_T.values()),
            "max_C_S": max(result.constants_S.values()),
            "envelope_ok": all(result.envelope_ok.values()),
            "band": [None, result.bound],
            "gamma_tilde": list(model.gamma_tilde_candidates()),
        })
        files = export_report(result, out_dir, study=study, summary=summary)

    else:
        report = _run_ladder_study(config, model, threads, seed)
        for level in report.ladder:
            log_study_event("level_finished", study, {"level": level.level, "mse": level.mse, "n": level.n_samples})
        gamma_tilde = tuple(report.extras.get("gamma_tilde") or model.gamma_tilde_candidates())
        low, high = default_band(config, gamma_tilde)
        low = config.band_low if config.band_low is not None else low
        high = config.band_high if config.band_high is not None else high
        metric = config.band_metric
        if config.study == StudyName.TOTAL_ERROR and config.band_metric == BandMetric.FITTED_RATE \
                and config.band_low is None and config.band_high is None:
            metric = BandMetric.FLATTENING_RATIO
        value = _metric(report, metric)
        ok = _in_band(value, low, high)
        if config.require_monotone:
            ok = ok and bool(report.extras.get("monotone", True))
        verdict = PASS if ok else FAIL
        summary.update({
            "verdict": verdict,
            "fitted_rate": report.fitted_rate,
            "rate_ci": list(report.rate_ci),
            "band_metric": metric.value,
            "band_value": value,
            "band": [low, high],
            "gamma_tilde": list(gamma_tilde),
            "extras": report.extras,
        })
        files = export_report(report, out_dir, study=study, summary=summary)

    elapsed = time.perf_counter() - started
    log_study_event("study_finished", study, {"verdict": verdict, "elapsed_s": round(elapsed, 3)})
    logger.info(f"스터디 완료: {study} → {verdict} ({elapsed:.1f}s)")
    return StudyOutcome(study, verdict, summary, files)
