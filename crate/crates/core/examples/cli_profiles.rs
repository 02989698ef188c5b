//! Drives the command-line harness from code: a quick multiclass run, then
//! evaluation of the saved model. Pass a CIFAR-10 directory to start the
//! hours-long `cifar-full` profile instead.

use bpt::harness::{run, Command, Invocation};

fn main() -> bpt::Result<()> {
    let out = std::env::temp_dir().join("bpt_cli_profiles");
    if let Some(dir) = std::env::args().nth(1) {
        let mut inv = Invocation::new(Command::TrainMulti, out.join("cifar"));
        inv.profile = Some("cifar-full".into());
        inv.dataset = Some(format!("cifar10:{dir}"));
        let report = run(&inv)?;
        println!("{}", serde_json::to_string_pretty(&report.summary).expect("json"));
        return Ok(());
    }

    let mut train = Invocation::new(Command::TrainMulti, out.join("train"));
    train.profile = Some("quick".into());
    train.seed = Some(7);
    let report = run(&train)?;
    println!("train-multi wrote {:?}", report.files);
    println!("test accuracy {}", report.summary["test_accuracy"]);

    let mut eval = Invocation::new(Command::Evaluate, out.join("eval"));
    eval.profile = Some("quick".into());
    eval.seed = Some(7);
    eval.settings = vec![format!("model={}", out.join("train/ensemble.bpte").display())];
    let report = run(&eval)?;
    println!("evaluate: accuracy {}", report.summary["accuracy"]);
    Ok(())
}
