from collections import namedtuple

TraceRecord=namedtuple("TraceRecord",["iter","cost","opt_mse","elapsed_ns"])

SolverTrace=namedtuple("SolverTrace",
["solver","records","final_beta","converged","iters_used","thresholds","final_residual","diagnostic"],
defaults=[(),None,""])

MCEstimate=namedtuple("MCEstimate",["value","stderr"])

AdmissibleInterval=namedtuple("AdmissibleInterval",["alpha_min","alpha_max"])

SEOutcome=namedtuple("SEOutcome",
["alpha","tau_star","lam","predicted_mse","tpp_inf","fdp_inf","tau_schedule",
 "tpp_prox_mc","fdp_prox_mc","converged"],
defaults=[None,None,None,None,None,(),None,None,True])

SelectionRates=namedtuple("SelectionRates",["tpp","fdp","tpp_stderr","fdp_stderr"])

EmpiricalMetrics=namedtuple("EmpiricalMetrics",["mse","tpp","fdp","n_selected"])

PathRow=namedtuple("PathRow",
["lam","empirical_mse","tpp","fdp","n_selected","predicted_mse","tpp_inf","fdp_inf"])

PathResult=namedtuple("PathResult",["lambdas","rows"])

QQTable=namedtuple("QQTable",["probs","empirical_q","predicted_q"])

BenchRow=namedtuple("BenchRow",["solver","target_mse","iters","wall_ns"])

CharacterizeRow=namedtuple("CharacterizeRow",["seed","empirical_mse","predicted_mse"])

GroupComparison=namedtuple("GroupComparison",["perfect_min_mse","mixed_min_mse","perfect_curve","mixed_curve"])

GenerationArtifact=namedtuple("GenerationArtifact",["is_generated","message","bundle_dir","n","p","n_groups"])

SolveArtifact=namedtuple("SolveArtifact",
["is_solved","message","solver","trace_file_path","final_beta_file_path","converged","iters_used","final_cost"])

StateEvolutionArtifact=namedtuple("StateEvolutionArtifact",
["message","outcome_file_path","schedule_file_path","outcome"])

PathArtifact=namedtuple("PathArtifact",["message","path_file_path","result"])

QQArtifact=namedtuple("QQArtifact",["message","qq_file_path","max_gap"])

BenchArtifact=namedtuple("BenchArtifact",["message","bench_file_path","rows"])

CharacterizeArtifact=namedtuple("CharacterizeArtifact",
["message","characterize_file_path","mean_empirical_mse","predicted_mse"])
