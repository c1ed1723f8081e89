"""Analytic-vs-numeric gradient audit over the composite losses."""

from psrl_lab.agents import audit_gradients


def test_audit_scenarios_pass_on_smooth_surfaces():
    result = audit_gradients(seeds=2, include_conv=False)
    assert result.passed, "\n".join(result.summary_lines())
    assert result.max_rel_error < 1e-4
    # every loss family shows up in the summary
    text = "\n".join(result.summary_lines())
    for name in ("critic", "actor_clipped", "entropy", "gaussian_actor",
                 "supervised", "composite_psrl", "asym_critic"):
        assert name in text


def test_audit_includes_conv_trunk_when_asked():
    result = audit_gradients(seeds=1, include_conv=True)
    assert result.passed
    assert "conv_composite" in "\n".join(result.summary_lines())
