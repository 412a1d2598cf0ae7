NORM_FLOOR = 1e-12


def update_beta(
    beta_c: float,
    grad_actor_norm: float,
    grad_critic_norm: float,
    critic_ratio: float,
    delta: float,
) -> float:
    """
    Running critic-gradient weight: β_c ← δ C ‖g_c‖/‖g_a‖ + (1 - δ) β_c.

    Skipped (β_c returned unchanged) when the actor norm is below 1e-12.
    """
    if grad_actor_norm < 0 or grad_critic_norm < 0:
        raise ValueError("Gradient norms must be non-negative")
    if grad_actor_norm < NORM_FLOOR:
        return beta_c
    return delta * critic_ratio * grad_critic_norm / grad_actor_norm + (1.0 - delta) * beta_c
