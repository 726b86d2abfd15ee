"""Preference poisoning toolkit for Bradley-Terry reward models.

Thin re-export of the compiled core: synthetic preference data, reward-model
training with analytic derivatives, gradient-based and rank-by-distance
label-flipping attacks, the defense baselines, and the evaluation helpers.
"""

from ._core import (  # noqa: F401
    AppendixBReport,
    ArchKind,
    Architecture,
    AttackTrace,
    DefenseReport,
    DistanceKind,
    FeatureLaw,
    GeneratorSpec,
    Goal,
    GradAttackConfig,
    ImplicitGradientResult,
    PcaProjection,
    Perturbation,
    PreferenceDataset,
    RbdDistance,
    RewardModel,
    SampleBound,
    SweepConfig,
    SweepRow,
    TargetSet,
    Theorem3Config,
    Theorem3Result,
    Theorem3Row,
    Theorem3Summary,
    TrainConfig,
    accuracy,
    appendix_b_scenario,
    apply_perturbation,
    bt_prob,
    budget_sweep,
    extreme_reward_outcomes,
    generate_synthetic,
    grad_U_wrt_delta,
    grad_loss,
    hessian_loss,
    implicit_gradient,
    label_randomization_defense,
    load_dataset,
    load_model,
    load_projection,
    loss,
    loss_outlier_defense,
    mixed_grad,
    pair_distance,
    pca_apply,
    pca_fit,
    per_pair_losses,
    proxy_objective,
    random_unit_vector,
    run_grad_attack,
    run_grad_attack_pca,
    run_rbd_attack,
    sample_bound,
    save_dataset,
    save_model,
    save_projection,
    set_distance,
    spectral_defense,
    stealth,
    subsample,
    success_rate,
    sweep_csv_header,
    sweep_row_csv,
    theorem3_experiment,
    train,
)

__all__ = [name for name in dir() if not name.startswith("_")]
