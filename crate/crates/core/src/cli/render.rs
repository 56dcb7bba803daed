//! Plain-text reports for the terminal.

use std::fmt::Write;

use crate::composer::ComposeReport;
use crate::compressor::{CompressionCertificate, VerifyReport};
use crate::games::Game;
use crate::liecart::{CartanReport, KakFactors};

pub(super) fn verdict(pass: bool) -> &'static str {
    if pass {
        "PASS"
    } else {
        "FAIL"
    }
}

/// Twelve significant digits, without trailing exponent noise for ordinary magnitudes.
pub(super) fn sig12(v: f64) -> String {
    if v == 0.0 || !v.is_finite() {
        return format!("{v}");
    }
    let decimals = (11 - v.abs().log10().floor() as i32).clamp(0, 17) as usize;
    format!("{v:.decimals$}")
}

pub(super) fn value_text(
    game: &Game,
    which: &str,
    value: f64,
    fraction: Option<(u64, u64)>,
    lower_bound: bool,
    per_question: &[Vec<f64>],
) -> String {
    let mut s = String::new();
    let _ = write!(s, "{which} value of {}: {}", game.name(), sig12(value));
    if let Some((n, d)) = fraction {
        let _ = write!(s, "  (= {n}/{d})");
    }
    if lower_bound {
        s.push_str("  (sampled lower bound)");
    }
    s.push('\n');
    let _ = writeln!(s, "acceptance per question pair (rows x, columns y):");
    for row in per_question {
        let cells: Vec<String> = row.iter().map(|v| format!("{v:>8.6}")).collect();
        let _ = writeln!(s, "  {}", cells.join(" "));
    }
    s
}

pub(super) fn compose_text(r: &ComposeReport) -> String {
    let mut s = String::new();
    let mode = match r.mode {
        crate::composer::ComposeMode::Tensor => "tensor",
        crate::composer::ComposeMode::Route => "route",
    };
    let _ = writeln!(s, "{mode} composition of {}", r.games.join(" ⊗ "));
    let _ = writeln!(s, "  qubits per player            {}", r.qubits_per_player);
    if let Some(t) = &r.tensor {
        let _ = writeln!(s, "  per-game qubits              {:?}", t.per_game_qubits);
        let _ = writeln!(s, "  value                        {}", sig12(t.value));
    }
    if let Some(rt) = &r.route {
        let _ = writeln!(s, "  tensor-product qubits        {}", rt.tensor_qubits);
        let _ = writeln!(s, "  uniform-referee value        {}", sig12(rt.uniform_referee_value));
    }
    let _ = writeln!(s, "  min per-question acceptance  {}", sig12(r.per_question_min_acceptance));
    for (k, v) in &r.residuals {
        let _ = writeln!(s, "  residual {k:<22} {v}");
    }
    let _ = writeln!(s, "  {}", verdict(r.pass));
    s
}

pub(super) fn certificate_text(c: &CompressionCertificate) -> String {
    let k = &c.checks;
    let mut s = String::new();
    let names: Vec<&str> = c.games.iter().map(|g| g.name.as_str()).collect();
    let _ = writeln!(s, "compression certificate for {}", names.join(", "));
    let _ = writeln!(s, "  per-game qubits n_i          {:?}", c.per_game_qubits);
    let _ = writeln!(s, "  baseline N = Σ n_i           {}", c.n_baseline);
    let _ = writeln!(
        s,
        "  compressed n̄                 {} ({} data + {} control)",
        c.n_compressed, c.data_qubits, c.control_qubits
    );
    if let Some(o) = &c.offline_choice {
        let _ = writeln!(s, "  offline measurement          {o}");
    }
    if let Some(p) = &c.pipeline {
        for step in &p.steps {
            let _ = writeln!(s, "  step {:<13} {}  {}", step.name, if step.ok { "ok  " } else { "FAIL" }, step.detail);
        }
        if let Some(b) = &p.lie_bound {
            let _ = writeln!(
                s,
                "  r_A = {}, r_B = {}, n = {}, capacity Σ(2^n_i − 1) = {}, strict {} / weak {}",
                b.r_a, b.r_b, b.n, b.capacity, b.strict_rank_condition, b.weak_rank_condition
            );
        }
        let _ = writeln!(s, "  common winning sector        {}", p.cws.status);
    }
    let _ = writeln!(s, "  POVM residual                {:.3e}", k.povm_max_residual);
    let _ = writeln!(s, "  block-diagonal residual      {:.3e}", k.block_diagonal_max);
    let _ = writeln!(s, "  cross-game commutator        {:.3e}", k.cross_commutation_max);
    let _ = writeln!(s, "  offline identity residual    {:.3e}", k.offline_identity_max);
    let _ = writeln!(s, "  offline residual on state    {:.3e}", k.offline_identity_on_state_max);
    let _ = writeln!(s, "  fixed-point residual         {:.3e}", k.fixed_point_max);
    let _ = writeln!(s, "  min per-game acceptance      {}", sig12(k.min_acceptance));
    let _ = writeln!(
        s,
        "  min product acceptance       {} over {} tuples{}",
        sig12(k.product_acceptance_min),
        k.product_tuples,
        if k.product_sampled { " (sampled)" } else { "" }
    );
    let _ = writeln!(s, "  n̄ < N                        {}", k.compression);
    let _ = writeln!(s, "  {}", verdict(k.overall_pass));
    s
}

pub(super) fn verify_text(r: &VerifyReport) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "certificate for {}: n̄ = {}, N = {}", r.games.join(", "), r.n_compressed, r.n_baseline);
    let _ = writeln!(s, "  recomputed claim holds       {}", r.recomputed.overall_pass);
    if r.mismatches.is_empty() {
        let _ = writeln!(s, "  stored checks match the recomputation");
    } else {
        for m in &r.mismatches {
            let _ = writeln!(s, "  mismatch: {m}");
        }
    }
    let _ = writeln!(s, "  {}", verdict(r.pass));
    s
}

pub(super) fn lie_text(hilbert: usize, dim_a: usize, dim_b: usize) -> String {
    let full = hilbert * hilbert - 1;
    format!(
        "Lie closure on a {hilbert}-dimensional space (su({hilbert}) has dimension {full})\n  Alice  {dim_a}{}\n  Bob    {dim_b}{}\n",
        if dim_a == full { "  (full)" } else { "" },
        if dim_b == full { "  (full)" } else { "" },
    )
}

pub(super) fn cartan_text(r: &CartanReport) -> String {
    format!(
        "su(4) = k ⊕ p with dim k = {}, dim p = {}, dim a = {}\n  [k,k] ⊆ k   {:.3e}\n  [k,p] ⊆ p   {:.3e}\n  [p,p] ⊆ k   {:.3e}\n  a ⊆ p       {:.3e}\n  a abelian   {:.3e}\n  {}\n",
        r.dims.0,
        r.dims.1,
        r.dims.2,
        r.kk_in_k,
        r.kp_in_p,
        r.pp_in_k,
        r.a_in_p,
        r.a_abelian,
        verdict(r.pass)
    )
}

pub(super) fn kak_text(f: &KakFactors) -> String {
    format!(
        "KAK factorization U = e^(iφ) (K1 ⊗ K1') exp(i Σ c_j σ_j⊗σ_j) (K2 ⊗ K2')\n  c = ({:.12}, {:.12}, {:.12})\n  reconstruction error  {:.3e}\n  locality residual     {:.3e}\n",
        f.c[0], f.c[1], f.c[2], f.recon_error, f.locality_residual
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sig12_keeps_twelve_significant_digits() {
        assert_eq!(sig12(0.75), "0.750000000000");
        assert_eq!(sig12(8.0 / 9.0), "0.888888888889");
        assert_eq!(sig12(12.5), "12.5000000000");
        assert_eq!(sig12(0.0), "0");
    }
}
