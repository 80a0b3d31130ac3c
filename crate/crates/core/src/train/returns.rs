use crate::scalar::Scalar;

/// Discounted n-step returns and advantages for a step-major batch.
///
/// `return_t = reward_t + gamma * return_{t+1}`, with the chain cut after a
/// terminal step and seeded with `bootstrap` after the last step.
pub fn compute_returns_advantages<T: Scalar>(
    rewards: &[f64],
    dones: &[bool],
    values: &[T],
    bootstrap: &[T],
    n_envs: usize,
    gamma: f64,
) -> (Vec<f64>, Vec<f64>) {
    let len = rewards.len();
    assert_eq!(len % n_envs.max(1), 0, "batch is not a whole number of steps");
    assert_eq!(dones.len(), len);
    assert_eq!(values.len(), len);
    let n_steps = len / n_envs.max(1);
    let mut returns = vec![0.0; len];
    for e in 0..n_envs {
        let mut next = bootstrap[e].to_f64_lossy();
        for t in (0..n_steps).rev() {
            let i = t * n_envs + e;
            if dones[i] {
                next = 0.0;
            }
            next = rewards[i] + gamma * next;
            returns[i] = next;
        }
    }
    let advantages = returns.iter().zip(values).map(|(r, v)| r - v.to_f64_lossy()).collect();
    (returns, advantages)
}
