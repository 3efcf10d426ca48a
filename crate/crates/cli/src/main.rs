//! Operator-facing command surface binding the toolkit into the
//! craft -> scan -> verify workflow.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};

use stegoprobe_core::container::{parse_container, FormatKind, RegionKind};
use stegoprobe_core::corpus::{default_manifest, generate_corpus, verify_corpus, CorpusManifest};
use stegoprobe_core::craft::{
    craft_append, craft_base64_wrap, craft_metadata, craft_obfuscated, mutate_variant,
    split_at_marker, Mutation, Protocol,
};
use stegoprobe_core::payload::eicar_bytes;
use stegoprobe_core::report::{exit_code, render_report, Media};
use stegoprobe_core::scan::{
    builtin_signatures, compute_digests, extract_strings, parse_signature_file, scan_with_options,
    shannon_entropy, ScanOptions, Signature,
};
use stegoprobe_core::transform::{TransformChain, TransformStep};

const EXIT_OK: u8 = 0;
const EXIT_SIGNATURE: u8 = 1;
const EXIT_SUSPICIOUS: u8 = 2;
const EXIT_ERROR: u8 = 3;

#[derive(Parser)]
#[command(
    name = "stegoprobe",
    version,
    about = "Craft and detect payloads hidden in image containers"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the region table of a container file
    Inspect(InspectArgs),
    /// Build a carrier file with an embedded payload
    Craft(CraftArgs),
    /// Split a file at the first occurrence of a marker
    Split(SplitArgs),
    /// Scan files for hidden signatures
    Scan(ScanArgs),
    /// Print MD5/SHA-1/SHA-256 digests of a file
    Hash(HashArgs),
    /// Extract printable strings from a file
    Strings(StringsArgs),
    /// Shannon entropy of a file
    Entropy(EntropyArgs),
    /// Generate the attack corpus plus clean controls
    CorpusGen(CorpusGenArgs),
    /// Scan a generated corpus against its expected-findings index
    CorpusVerify(CorpusVerifyArgs),
}

#[derive(Args)]
struct InspectArgs {
    file: PathBuf,
    /// Emit machine-readable JSON
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct CraftArgs {
    /// append | metadata | obfuscated | base64-wrap
    #[arg(long)]
    protocol: Protocol,
    /// Carrier image path, or builtin:jpeg / builtin:png / builtin:gif / builtin:bmp
    #[arg(long)]
    carrier: String,
    /// "eicar" for the built-in test payload, or a path to payload bytes
    #[arg(long, default_value = "eicar")]
    payload: String,
    /// Comma-separated forward obfuscation steps (e.g. reverse,base64_encode)
    #[arg(long, value_delimiter = ',')]
    chain: Vec<TransformStep>,
    /// Mutation to apply after crafting (repeatable): linebreak | trailing-space
    #[arg(long = "mutate")]
    mutations: Vec<Mutation>,
    /// Output path for the crafted file
    #[arg(short, long)]
    output: PathBuf,
    /// Emit machine-readable JSON
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct SplitArgs {
    file: PathBuf,
    /// Marker text, or hex-prefixed raw bytes ("hex:ffd9")
    #[arg(long)]
    marker: String,
    /// Output path for the bytes before the marker
    #[arg(long = "o1")]
    out1: PathBuf,
    /// Output path for the marker and everything after it
    #[arg(long = "o2")]
    out2: PathBuf,
    /// Emit machine-readable JSON
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct ScanArgs {
    #[arg(required = true)]
    files: Vec<PathBuf>,
    /// Inverse-transform search depth
    #[arg(long, default_value_t = 2)]
    depth: usize,
    /// Emit machine-readable JSON
    #[arg(long)]
    json: bool,
    /// Signature file (tab-separated id, encoding, data); defaults to the built-in set
    #[arg(long)]
    signatures: Option<PathBuf>,
    /// Omit the timestamp so output is byte-identical across runs
    #[arg(long)]
    deterministic: bool,
}

#[derive(Args)]
struct HashArgs {
    file: PathBuf,
    /// Emit machine-readable JSON
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct StringsArgs {
    file: PathBuf,
    /// Minimum printable run length
    #[arg(long, default_value_t = 4)]
    min: usize,
    /// Emit machine-readable JSON
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct EntropyArgs {
    file: PathBuf,
    /// Also report entropy per parsed region
    #[arg(long)]
    per_region: bool,
    /// Emit machine-readable JSON
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct CorpusGenArgs {
    /// Manifest JSON; defaults to the built-in manifest
    #[arg(long)]
    manifest: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    /// Store files base64-wrapped so resident antivirus leaves the corpus alone
    #[arg(long)]
    defang: bool,
    /// Emit machine-readable JSON
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct CorpusVerifyArgs {
    #[arg(long)]
    index: PathBuf,
    #[arg(long, default_value_t = 2)]
    depth: usize,
    /// Emit machine-readable JSON
    #[arg(long)]
    json: bool,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_ERROR,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };

    let outcome = match cli.command {
        Command::Inspect(args) => cmd_inspect(args),
        Command::Craft(args) => cmd_craft(args),
        Command::Split(args) => cmd_split(args),
        Command::Scan(args) => cmd_scan(args),
        Command::Hash(args) => cmd_hash(args),
        Command::Strings(args) => cmd_strings(args),
        Command::Entropy(args) => cmd_entropy(args),
        Command::CorpusGen(args) => cmd_corpus_gen(args),
        Command::CorpusVerify(args) => cmd_corpus_verify(args),
    };

    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(message) => {
            eprintln!("stegoprobe: {message}");
            ExitCode::from(EXIT_ERROR)
        }
    }
}

type CmdResult = Result<u8, String>;

fn read_file(path: &Path) -> Result<Vec<u8>, String> {
    fs::read(path).map_err(|e| format!("cannot read {}: {e}", path.display()))
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), String> {
    fs::write(path, bytes).map_err(|e| format!("cannot write {}: {e}", path.display()))
}

fn print_json<T: serde::Serialize>(value: &T) -> Result<(), String> {
    let text = serde_json::to_string_pretty(value).map_err(|e| e.to_string())?;
    println!("{text}");
    Ok(())
}

fn kind_name(kind: RegionKind) -> &'static str {
    match kind {
        RegionKind::Header => "header",
        RegionKind::Segment => "segment",
        RegionKind::Metadata => "metadata",
        RegionKind::ImageData => "image_data",
        RegionKind::PostEofTrailer => "post_eof_trailer",
    }
}

fn cmd_inspect(args: InspectArgs) -> CmdResult {
    let bytes = read_file(&args.file)?;
    let parsed = parse_container(&bytes);

    if args.json {
        print_json(&serde_json::json!({
            "path": args.file.display().to_string(),
            "format": parsed.format,
            "well_formed": parsed.well_formed,
            "regions": parsed.regions,
            "diagnostics": parsed.diagnostics,
        }))?;
        return Ok(EXIT_OK);
    }

    println!(
        "{}: {} ({} bytes, well_formed: {})",
        args.file.display(),
        parsed.format.kind,
        bytes.len(),
        parsed.well_formed
    );
    println!("{:>10}  {:>10}  {:<16}  label", "offset", "length", "kind");
    for r in &parsed.regions {
        println!(
            "{:>10}  {:>10}  {:<16}  {}",
            r.offset,
            r.length,
            kind_name(r.kind),
            r.label
        );
    }
    for d in &parsed.diagnostics {
        eprintln!("note: {d}");
    }
    Ok(EXIT_OK)
}

fn resolve_carrier(spec: &str) -> Result<Vec<u8>, String> {
    if let Some(name) = spec.strip_prefix("builtin:") {
        let kind = match name {
            "jpeg" | "jpg" => FormatKind::Jpeg,
            "png" => FormatKind::Png,
            "gif" => FormatKind::Gif,
            "bmp" => FormatKind::Bmp,
            other => return Err(format!("no built-in carrier named {other}")),
        };
        return Ok(stegoprobe_core::carrier::builtin_carrier(kind).expect("builtin exists"));
    }
    read_file(Path::new(spec))
}

fn cmd_craft(args: CraftArgs) -> CmdResult {
    let carrier = resolve_carrier(&args.carrier)?;
    let payload = if args.payload == "eicar" {
        eicar_bytes()
    } else {
        eprintln!(
            "stegoprobe: using user-supplied payload bytes from {}",
            args.payload
        );
        read_file(Path::new(&args.payload))?
    };

    let chain = TransformChain::new(args.chain.clone());
    let mut out = match args.protocol {
        Protocol::AppendPostEof => craft_append(&carrier, &payload),
        Protocol::MetadataEmbed => craft_metadata(&carrier, &payload),
        Protocol::ObfuscatedAppend => craft_obfuscated(&carrier, &payload, &chain),
        Protocol::Base64Wrap => {
            craft_append(&carrier, &payload).map(|appended| craft_base64_wrap(&appended))
        }
    }
    .map_err(|e| e.to_string())?;

    for mutation in &args.mutations {
        out = mutate_variant(&out, *mutation).map_err(|e| e.to_string())?;
    }

    write_file(&args.output, &out)?;

    if args.json {
        print_json(&serde_json::json!({
            "protocol": args.protocol,
            "output": args.output.display().to_string(),
            "bytes_written": out.len(),
            "digests": compute_digests(&out),
        }))?;
    } else {
        println!(
            "wrote {} ({} bytes, md5 {})",
            args.output.display(),
            out.len(),
            compute_digests(&out).md5
        );
    }
    Ok(EXIT_OK)
}

fn parse_marker(spec: &str) -> Result<Vec<u8>, String> {
    if let Some(hex) = spec.strip_prefix("hex:") {
        let cleaned: String = hex.chars().filter(|c| !c.is_ascii_whitespace()).collect();
        if cleaned.is_empty() || !cleaned.len().is_multiple_of(2) {
            return Err("hex marker needs an even, non-zero number of digits".into());
        }
        return (0..cleaned.len())
            .step_by(2)
            .map(|i| {
                u8::from_str_radix(&cleaned[i..i + 2], 16)
                    .map_err(|_| format!("invalid hex marker digits at position {i}"))
            })
            .collect();
    }
    Ok(spec.as_bytes().to_vec())
}

fn cmd_split(args: SplitArgs) -> CmdResult {
    let bytes = read_file(&args.file)?;
    let marker = parse_marker(&args.marker)?;
    let split = split_at_marker(&bytes, &marker).map_err(|e| e.to_string())?;

    write_file(&args.out1, &split.part1)?;
    write_file(&args.out2, &split.part2)?;

    if args.json {
        print_json(&serde_json::json!({
            "found": split.found,
            "marker_offset": split.found.then_some(split.part1.len()),
            "part1": { "path": args.out1.display().to_string(), "length": split.part1.len() },
            "part2": { "path": args.out2.display().to_string(), "length": split.part2.len() },
        }))?;
        return Ok(EXIT_OK);
    }

    if split.found {
        println!(
            "marker found at offset {}; part1 {} bytes, part2 {} bytes",
            split.part1.len(),
            split.part1.len(),
            split.part2.len()
        );
    } else {
        println!(
            "marker not found; part1 holds the whole input ({} bytes), part2 is empty",
            split.part1.len()
        );
    }
    Ok(EXIT_OK)
}

fn load_signatures(path: Option<&Path>) -> Result<Vec<Signature>, String> {
    match path {
        None => Ok(builtin_signatures()),
        Some(p) => {
            let text =
                fs::read_to_string(p).map_err(|e| format!("cannot read {}: {e}", p.display()))?;
            parse_signature_file(&text).map_err(|e| e.to_string())
        }
    }
}

fn unix_timestamp() -> u64 {
    std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

fn cmd_scan(args: ScanArgs) -> CmdResult {
    let signatures = load_signatures(args.signatures.as_deref())?;
    let opts = ScanOptions::with_depth(args.depth);

    let mut worst: u8 = EXIT_OK;
    let mut had_error = false;
    let mut json_reports: Vec<serde_json::Value> = Vec::new();

    for file in &args.files {
        let bytes = match read_file(file) {
            Ok(b) => b,
            Err(e) => {
                eprintln!("stegoprobe: {e}");
                had_error = true;
                continue;
            }
        };
        let mut report = scan_with_options(&bytes, &signatures, &opts);
        report.target.path = file.display().to_string();
        if !args.deterministic {
            report.timestamp = Some(unix_timestamp());
        }

        let code = exit_code(&report) as u8;
        worst = match (worst, code) {
            (EXIT_SIGNATURE, _) | (_, EXIT_SIGNATURE) => EXIT_SIGNATURE,
            (EXIT_SUSPICIOUS, _) | (_, EXIT_SUSPICIOUS) => EXIT_SUSPICIOUS,
            _ => EXIT_OK,
        };

        if args.json {
            let rendered = render_report(&report, Media::Json);
            let value: serde_json::Value =
                serde_json::from_slice(&rendered.bytes).map_err(|e| e.to_string())?;
            json_reports.push(value);
        } else {
            let rendered = render_report(&report, Media::Text);
            print!("{}", String::from_utf8_lossy(&rendered.bytes));
            if args.files.len() > 1 {
                println!();
            }
        }
    }

    if args.json {
        print_json(&json_reports)?;
    }

    if had_error {
        return Ok(EXIT_ERROR);
    }
    Ok(worst)
}

fn cmd_hash(args: HashArgs) -> CmdResult {
    let bytes = read_file(&args.file)?;
    let digests = compute_digests(&bytes);
    if args.json {
        print_json(&serde_json::json!({
            "path": args.file.display().to_string(),
            "md5": digests.md5,
            "sha1": digests.sha1,
            "sha256": digests.sha256,
        }))?;
    } else {
        println!("md5     {}", digests.md5);
        println!("sha1    {}", digests.sha1);
        println!("sha256  {}", digests.sha256);
    }
    Ok(EXIT_OK)
}

fn cmd_strings(args: StringsArgs) -> CmdResult {
    if args.min < 1 {
        return Err("--min must be at least 1".into());
    }
    let bytes = read_file(&args.file)?;
    let hits = extract_strings(&bytes, args.min);
    if args.json {
        let entries: Vec<serde_json::Value> = hits
            .iter()
            .map(|(offset, text)| serde_json::json!({ "offset": offset, "text": text }))
            .collect();
        print_json(&serde_json::json!({
            "path": args.file.display().to_string(),
            "min_len": args.min,
            "strings": entries,
        }))?;
    } else {
        for (offset, text) in hits {
            println!("{offset:>8}  {text}");
        }
    }
    Ok(EXIT_OK)
}

fn cmd_entropy(args: EntropyArgs) -> CmdResult {
    let bytes = read_file(&args.file)?;
    let whole = shannon_entropy(&bytes);

    if args.json {
        let per_region = args.per_region.then(|| {
            let parsed = parse_container(&bytes);
            parsed
                .regions
                .iter()
                .map(|r| {
                    serde_json::json!({
                        "label": r.label,
                        "kind": r.kind,
                        "offset": r.offset,
                        "length": r.length,
                        "bits_per_byte": shannon_entropy(&bytes[r.offset..r.offset + r.length]),
                    })
                })
                .collect::<Vec<_>>()
        });
        print_json(&serde_json::json!({
            "path": args.file.display().to_string(),
            "whole": whole,
            "per_region": per_region,
        }))?;
        return Ok(EXIT_OK);
    }

    println!("{whole:.6} bits/byte  {}", args.file.display());
    if args.per_region {
        let parsed = parse_container(&bytes);
        for r in &parsed.regions {
            let h = shannon_entropy(&bytes[r.offset..r.offset + r.length]);
            println!("{h:>10.6}  {:>10}  {:>10}  {}", r.offset, r.length, r.label);
        }
    }
    Ok(EXIT_OK)
}

fn cmd_corpus_gen(args: CorpusGenArgs) -> CmdResult {
    let manifest: CorpusManifest = match &args.manifest {
        None => default_manifest(),
        Some(path) => {
            let text = fs::read_to_string(path)
                .map_err(|e| format!("cannot read {}: {e}", path.display()))?;
            serde_json::from_str(&text).map_err(|e| format!("invalid manifest: {e}"))?
        }
    };

    let index = generate_corpus(&manifest, &args.out, args.defang).map_err(|e| e.to_string())?;
    let attack = index.entries.iter().filter(|e| e.expected.detect).count();
    let controls = index.entries.len() - attack;

    if args.json {
        print_json(&serde_json::json!({
            "out_dir": args.out.display().to_string(),
            "index": args.out.join("index.json").display().to_string(),
            "attack_entries": attack,
            "control_entries": controls,
            "defanged": index.defanged,
        }))?;
    } else {
        println!(
            "generated {} attack entries + {} controls in {} (index.json written{})",
            attack,
            controls,
            args.out.display(),
            if index.defanged { ", defanged" } else { "" }
        );
    }
    Ok(EXIT_OK)
}

fn cmd_corpus_verify(args: CorpusVerifyArgs) -> CmdResult {
    let result = verify_corpus(&args.index, args.depth).map_err(|e| e.to_string())?;

    if args.json {
        print_json(&result)?;
        if result.passed {
            return Ok(EXIT_OK);
        }
        return Err("corpus verification failed".into());
    }

    for e in &result.entries {
        println!(
            "{}  {}  {}",
            if e.passed { "PASS" } else { "FAIL" },
            e.id,
            e.detail
        );
    }
    println!("{}", result.summary_line());

    if result.passed {
        Ok(EXIT_OK)
    } else {
        Err(format!(
            "corpus verification failed: {}",
            result.summary_line()
        ))
    }
}
