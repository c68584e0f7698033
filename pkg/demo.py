from sglamp.config import Configuration
from sglamp.pipeline import Pipeline

pipeline=Pipeline(config=Configuration(config_file_path="config/bench_iterations.yaml"))
bench_artifact=pipeline.start_bench()
print(f'\n bench_artifact:{bench_artifact.bench_file_path}')
for row in bench_artifact.rows:
    print(f'{row.solver:>10} {row.target_mse:8.0e} {row.iters:6d} {row.wall_ns/1e6:10.1f} ms')
