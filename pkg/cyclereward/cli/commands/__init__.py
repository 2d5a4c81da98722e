from cyclereward.cli.commands import bench_tape, evaluate, finetune, gen_data, pretrain, sample

COMMANDS = (gen_data, pretrain, finetune, sample, evaluate, bench_tape)
