//! `unicirc`: command-line front end of the compiling toolkit.
//!
//! Every command that writes a result also writes `<output>.manifest.json`
//! beside it; `unicirc replay <manifest>` reruns the recorded command and
//! byte-compares the outputs. Exit statuses are listed in [`error::exit`].

mod args;
mod commands;
mod error;
mod files;
mod manifest;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command, ReplayArgs};
use error::{CliError, CliResult};
use files::{absolute, manifest_path, output_path, sha256_hex, to_json_bytes, write_atomic};
use manifest::{command_seed, now_unix_ms, FileDigest, RunManifest, SeedRecord, SEED_SCHEME};

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Replay(args) => replay(&cli.out_dir, args),
        command => execute(&cli.out_dir, command).and_then(|(_, verdict)| verdict.map_or(Ok(()), Err)),
    };
    match result {
        Ok(()) => ExitCode::from(error::exit::OK),
        Err(e) => {
            eprintln!("unicirc: {e}");
            ExitCode::from(e.code())
        }
    }
}

fn absolutize(path: &mut PathBuf) -> CliResult<()> {
    *path = absolute(path)?;
    Ok(())
}

/// Input paths are stored absolute so a manifest replays from any directory.
fn absolutize_inputs(command: &mut Command) -> CliResult<()> {
    let topology = |t: &mut args::TopologySource| -> CliResult<()> {
        if let Some(p) = t.topology.as_mut() {
            absolutize(p)?;
        }
        Ok(())
    };
    match command {
        Command::FindUnity(a) => topology(&mut a.topology)?,
        Command::CheckUniversal(a) => {
            topology(&mut a.topology)?;
            absolutize(&mut a.unity)?;
        }
        Command::Compile(a) => {
            topology(&mut a.topology)?;
            absolutize(&mut a.unity)?;
            if let Some(p) = a.target.matrix.as_mut() {
                absolutize(p)?;
            }
        }
        Command::Bench(a) => {
            for p in a.topologies.iter_mut().chain(a.unities.iter_mut()) {
                absolutize(p)?;
            }
        }
        Command::Bounds(_) | Command::Presets(_) | Command::Replay(_) => {}
    }
    Ok(())
}

/// Points every output at its file name inside the (new) output directory.
fn redirect_outputs(command: &mut Command) {
    let base = |p: &mut PathBuf| {
        if let Some(name) = p.file_name() {
            *p = PathBuf::from(name);
        }
    };
    match command {
        Command::FindUnity(a) => base(&mut a.out),
        Command::CheckUniversal(a) => base(&mut a.out),
        Command::Compile(a) => {
            base(&mut a.out);
            if let Some(t) = a.traces.as_mut() {
                base(t);
            }
        }
        Command::Bench(a) => base(&mut a.out),
        Command::Bounds(_) | Command::Presets(_) | Command::Replay(_) => {}
    }
}

/// Runs one command, writes its files and manifest, and returns the written
/// digests together with any failure that is reported after writing.
fn execute(out_dir: &Path, command: &Command) -> CliResult<(Vec<FileDigest>, Option<CliError>)> {
    let mut command = command.clone();
    absolutize_inputs(&mut command)?;
    let started = now_unix_ms();
    let outcome = commands::run(&command)?;
    print!("{}", outcome.stdout);
    let mut outputs = Vec::with_capacity(outcome.files.len());
    for (path, bytes) in &outcome.files {
        let path = output_path(out_dir, path);
        write_atomic(&path, bytes)?;
        outputs.push(FileDigest {
            path,
            sha256: sha256_hex(bytes),
        });
    }
    if let Some(primary) = outputs.first() {
        let manifest = RunManifest {
            tool: "unicirc".into(),
            tool_version: commands::TOOL_VERSION.into(),
            command: command.verb().into(),
            seeds: SeedRecord {
                command_seed: command_seed(&command),
                scheme: SEED_SCHEME.into(),
                children: outcome.seeds,
            },
            args: command,
            out_dir: out_dir.to_path_buf(),
            config: outcome.config,
            inputs: outcome.inputs,
            outputs: outputs.clone(),
            started_unix_ms: started,
            finished_unix_ms: now_unix_ms(),
        };
        let path = manifest_path(&primary.path);
        write_atomic(&path, &to_json_bytes(&manifest))?;
        eprintln!("wrote {} (manifest {})", primary.path.display(), path.display());
    }
    Ok((outputs, outcome.verdict))
}

fn replay(out_dir: &Path, args: &ReplayArgs) -> CliResult<()> {
    let text = files::read_text(&args.manifest)?;
    let recorded: RunManifest =
        serde_json::from_str(&text).map_err(|e| CliError::parse_in(&args.manifest, e))?;
    for input in &recorded.inputs {
        let now = sha256_hex(&files::read_bytes(&input.path)?);
        if now != input.sha256 {
            return Err(CliError::Validation(format!(
                "input {} changed since the recorded run",
                input.path.display()
            )));
        }
    }
    let mut command = recorded.args.clone();
    redirect_outputs(&mut command);
    let (outputs, _) = execute(out_dir, &command)?;
    if outputs.len() != recorded.outputs.len() {
        return Err(CliError::ReplayMismatch(format!(
            "replay wrote {} files, the recorded run {}",
            outputs.len(),
            recorded.outputs.len()
        )));
    }
    let mut differing = Vec::new();
    for (new, old) in outputs.iter().zip(&recorded.outputs) {
        let same = new.sha256 == old.sha256;
        println!(
            "{} {} (recorded {})",
            if same { "identical" } else { "DIFFERS" },
            new.path.display(),
            old.path.display()
        );
        if !same {
            differing.push(new.path.display().to_string());
        }
    }
    if differing.is_empty() {
        Ok(())
    } else {
        Err(CliError::ReplayMismatch(differing.join(", ")))
    }
}
