//! Seeded synthetic Python repositories with planted completion points.
//!
//! Each pattern is a function family made of three line blocks: a lead-in,
//! a continuation and a tail. The family is copied into several library
//! files and once into its own task file. Copies share every block line
//! verbatim but carry per-copy trace lines in the lead-in and tail, so no two
//! chunks of the repository have identical text. A completion point cuts the
//! continuation out of the task file: the prefix ends with the lead-in and
//! the suffix starts with the tail. In the library copies the continuation
//! sits right after the lead-in, so it lands in the chunk that follows a
//! lead-in chunk and precedes a tail chunk.

use std::collections::HashSet;
use std::fs;
use std::path::Path;

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::context::{CompletionQuery, RecentFile};
use crate::error::{Error, Result};
use crate::eval::dataset::EvalRecord;

const CONSONANTS: &[u8] = b"bdfgklmnprstvz";
const VOWELS: &[u8] = b"aeiou";

const LEAD_LINES: usize = 50;
const MIDDLE_LINES: usize = 8;
const TAIL_LINES: usize = 50;
const TRACE_EVERY: usize = 6;
const FILLER_POOL: usize = 4000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SynthConfig {
    pub seed: u64,
    /// Total files written, task files included.
    pub file_count: usize,
    /// Families, and therefore completion points and task files.
    pub pattern_count: usize,
    /// Library copies per family.
    pub copies: usize,
}

impl SynthConfig {
    pub fn new(seed: u64, file_count: usize, pattern_count: usize) -> Self {
        Self {
            seed,
            file_count,
            pattern_count,
            copies: 6,
        }
    }

    pub fn library_files(&self) -> usize {
        self.file_count.saturating_sub(self.pattern_count)
    }

    fn validate(&self) -> Result<()> {
        if self.pattern_count > 0 && self.library_files() == 0 {
            return Err(Error::Config(format!(
                "{} patterns need more than {} files (one task file per pattern plus library files)",
                self.pattern_count, self.file_count
            )));
        }
        if self.pattern_count > 0 && self.copies == 0 {
            return Err(Error::Config("each pattern needs at least one library copy".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SyntheticRepo {
    /// Repository-relative path and content, sorted by path.
    pub files: Vec<(String, String)>,
    pub records: Vec<EvalRecord>,
}

struct Words {
    used: HashSet<String>,
    filler: Vec<String>,
}

impl Words {
    fn new(rng: &mut ChaCha8Rng) -> Self {
        let mut words = Words {
            used: HashSet::new(),
            filler: Vec::new(),
        };
        words.filler = (0..FILLER_POOL).map(|_| words.fresh(rng)).collect();
        words
    }

    /// A pseudo-word never handed out before.
    fn fresh(&mut self, rng: &mut ChaCha8Rng) -> String {
        loop {
            let syllables = rng.random_range(2..=4);
            let mut word = String::with_capacity(syllables * 2);
            for _ in 0..syllables {
                word.push(*CONSONANTS.choose(rng).unwrap() as char);
                word.push(*VOWELS.choose(rng).unwrap() as char);
            }
            if self.used.insert(word.clone()) {
                return word;
            }
        }
    }

    fn filler(&self, rng: &mut ChaCha8Rng) -> &str {
        self.filler.choose(rng).unwrap()
    }
}

struct Family {
    name: String,
    lead: Vec<String>,
    middle: Vec<String>,
    tail: Vec<String>,
}

fn statement(rng: &mut ChaCha8Rng, pool: &[String], indent: &str) -> String {
    let pick = |rng: &mut ChaCha8Rng| pool.choose(rng).unwrap().clone();
    let (a, b, c, d) = (pick(rng), pick(rng), pick(rng), pick(rng));
    match rng.random_range(0..4) {
        0 => format!("{indent}{a} = {b}.{c}({d})"),
        1 => format!("{indent}{a} = {b}({c}, {d})"),
        2 => format!("{indent}{a}.{b} = {c} + {d}"),
        _ => format!("{indent}{a} = {b}[{c}] or {d}"),
    }
}

/// `lines` statements over a vocabulary private to this block.
fn block(lines: usize, words: &mut Words, rng: &mut ChaCha8Rng) -> Vec<String> {
    let pool: Vec<String> = (0..lines / 2 + 6).map(|_| words.fresh(rng)).collect();
    (0..lines).map(|_| statement(rng, &pool, "    ")).collect()
}

fn make_family(words: &mut Words, rng: &mut ChaCha8Rng) -> Family {
    let name = words.fresh(rng);
    let lead = block(LEAD_LINES, words, rng);
    let middle = block(MIDDLE_LINES, words, rng);
    let tail = block(TAIL_LINES, words, rng);
    Family {
        name,
        lead,
        middle,
        tail,
    }
}

fn with_traces(lines: &[String], words: &mut Words, rng: &mut ChaCha8Rng) -> Vec<String> {
    let mut out = Vec::with_capacity(lines.len() + lines.len() / TRACE_EVERY + 1);
    for (i, line) in lines.iter().enumerate() {
        if i % TRACE_EVERY == 0 {
            out.push(format!("    trace(\"{}\")", words.fresh(rng)));
        }
        out.push(line.clone());
    }
    out
}

/// A copy of `family` as (lead lines, middle lines, tail lines).
fn family_copy(
    family: &Family,
    words: &mut Words,
    rng: &mut ChaCha8Rng,
) -> (Vec<String>, Vec<String>, Vec<String>) {
    let mut lead = vec![format!("def {}_{}(self):", family.name, words.fresh(rng))];
    lead.extend(with_traces(&family.lead, words, rng));
    let mut tail = with_traces(&family.tail, words, rng);
    tail.push("    return self".to_owned());
    (lead, family.middle.clone(), tail)
}

fn filler_function(words: &mut Words, rng: &mut ChaCha8Rng) -> Vec<String> {
    let name = words.fresh(rng);
    let arg = words.filler(rng).to_owned();
    let mut lines = vec![format!("def {name}({arg}):")];
    for _ in 0..rng.random_range(4..10) {
        let (a, b, c) = (
            words.filler(rng).to_owned(),
            words.filler(rng).to_owned(),
            words.filler(rng).to_owned(),
        );
        lines.push(format!("    {a} = {b}({c})"));
    }
    lines.push(format!("    return {}", words.filler(rng)));
    lines
}

fn join_block(lines: &[String]) -> String {
    lines.iter().map(|l| format!("{l}\n")).collect()
}

pub fn synthesize(config: &SynthConfig) -> Result<SyntheticRepo> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut words = Words::new(&mut rng);

    let library_count = config.library_files();
    let mut library_blocks: Vec<Vec<Vec<String>>> = vec![Vec::new(); library_count];
    for blocks in library_blocks.iter_mut() {
        for _ in 0..rng.random_range(2..5) {
            blocks.push(filler_function(&mut words, &mut rng));
        }
    }

    let families: Vec<Family> = (0..config.pattern_count)
        .map(|_| make_family(&mut words, &mut rng))
        .collect();

    for family in &families {
        let mut targets: Vec<usize> = (0..library_count).collect();
        targets.shuffle(&mut rng);
        for i in 0..config.copies {
            let target = targets[i % library_count];
            let (lead, middle, tail) = family_copy(family, &mut words, &mut rng);
            library_blocks[target].push([lead, middle, tail].concat());
        }
    }

    let mut files = Vec::with_capacity(config.file_count);
    for (i, blocks) in library_blocks.iter_mut().enumerate() {
        blocks.shuffle(&mut rng);
        let content = blocks
            .iter()
            .map(|b| join_block(b))
            .collect::<Vec<_>>()
            .join("\n");
        files.push((format!("lib/lib_{i:03}.py"), content));
    }

    struct Task {
        path: String,
        before: String,
        middle: String,
        after: String,
    }
    let mut tasks = Vec::with_capacity(families.len());
    for (i, family) in families.iter().enumerate() {
        let mut head: Vec<String> = Vec::new();
        for _ in 0..2 {
            head.extend(filler_function(&mut words, &mut rng));
            head.push(String::new());
        }
        let (lead, middle, tail) = family_copy(family, &mut words, &mut rng);
        head.extend(lead);
        let mut rest = tail;
        rest.push(String::new());
        rest.extend(filler_function(&mut words, &mut rng));
        tasks.push(Task {
            path: format!("app/task_{i:03}.py"),
            before: join_block(&head),
            middle: join_block(&middle),
            after: join_block(&rest),
        });
    }

    for task in &tasks {
        files.push((
            task.path.clone(),
            format!("{}{}{}", task.before, task.middle, task.after),
        ));
    }
    files.sort();

    let records = tasks
        .iter()
        .enumerate()
        .map(|(i, task)| {
            let recent_files = if tasks.len() > 1 {
                let other = &tasks[(i + 1) % tasks.len()];
                vec![RecentFile {
                    path: other.path.clone(),
                    content: format!("{}{}{}", other.before, other.middle, other.after),
                }]
            } else {
                Vec::new()
            };
            EvalRecord {
                query: CompletionQuery {
                    prefix: task.before.clone(),
                    suffix: task.after.clone(),
                    completion_file_path: task.path.clone(),
                    completion_file_content: format!("{}{}", task.before, task.after),
                    recent_files,
                    repo_id: String::new(),
                },
                middle: task.middle.clone(),
                model_output: None,
            }
        })
        .collect();

    Ok(SyntheticRepo { files, records })
}

/// Writes the synthetic repository under `root` and returns it.
pub fn generate_synthetic_repo(root: &Path, config: &SynthConfig) -> Result<SyntheticRepo> {
    let repo = synthesize(config)?;
    for (rel, content) in &repo.files {
        let path = root.join(rel);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        }
        fs::write(&path, content).map_err(|e| Error::io(&path, e))?;
    }
    Ok(repo)
}
