from ConeFlows.flow_engine.engine import (
    FlowState,
    RunResult,
    initial_state,
    run,
    stability_dt,
    step,
    step_explicit,
)
from ConeFlows.flow_engine.semi_implicit_stepper import assemble_semi_implicit, solve_semi_implicit
from ConeFlows.flow_engine.speeds import effective_lambda, lambda_constrained, normal_speed
