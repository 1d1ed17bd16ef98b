//! Statement rating: one isolated prompt per unique statement, cached.

pub mod cache;
pub mod prompt;
pub mod provider;

use std::collections::BTreeMap;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use cache::{CacheError, CacheKey, CacheRecord, RatingCache, Transcript, TranscriptRecord};
pub use prompt::{build_prompt, parse_reply, ParseError, PromptProfile};
pub use provider::{LlmProvider, MockProvider, Provider, ProviderError, ReplayProvider, Request};

use crate::slicer::StatementSet;

/// Attempts per statement before giving up.
pub const MAX_ATTEMPTS: usize = 3;

/// Share of flagged statements above which a rating run fails.
pub const FLAGGED_TOLERANCE: f64 = 0.10;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rating {
    pub statement: String,
    pub value: u8,
    pub provider: String,
    pub profile: PromptProfile,
    /// The value is a fallback 0, not a parsed reply.
    pub flagged: bool,
}

/// Ratings keyed by normalized statement text.
pub type RatingMap = BTreeMap<String, Rating>;

/// A rating and whether it came from the cache.
type Outcome = Result<(Rating, bool), RateError>;

#[derive(Debug, Error)]
pub enum RateError {
    #[error("provider unreachable while rating `{statement}`: {message}")]
    Transport { statement: String, message: String },
    #[error("{flagged} of {total} statements could not be rated")]
    TooManyFlagged { flagged: usize, total: usize },
    #[error(transparent)]
    Cache(#[from] CacheError),
}

/// Result of rating a statement set.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct RatingRun {
    pub ratings: RatingMap,
    pub cache_hits: usize,
    /// Statements that went to the provider (not attempts).
    pub rated: usize,
    pub flagged: usize,
}

/// A provider bound to a profile, a cache and an optional transcript.
pub struct Rater<'a> {
    pub provider: &'a dyn Provider,
    pub profile: PromptProfile,
    pub cache: &'a RatingCache,
    pub transcript: Option<&'a Transcript>,
}

impl<'a> Rater<'a> {
    pub fn new(provider: &'a dyn Provider, profile: PromptProfile, cache: &'a RatingCache) -> Self {
        Rater {
            provider,
            profile,
            cache,
            transcript: None,
        }
    }

    pub fn with_transcript(mut self, transcript: &'a Transcript) -> Self {
        self.transcript = Some(transcript);
        self
    }

    fn log(&self, prompt: &str, outcome: &Result<String, ProviderError>) {
        if let Some(t) = self.transcript {
            let rec = TranscriptRecord {
                provider: self.provider.id().to_string(),
                profile: self.profile,
                prompt: prompt.to_string(),
                reply: outcome.as_ref().ok().cloned(),
                error: outcome.as_ref().err().map(ToString::to_string),
            };
            if let Err(e) = t.log(&rec) {
                log::warn!("transcript write failed: {e}");
            }
        }
    }

    /// Rate one statement, consulting the cache first. The boolean is true
    /// on a cache hit.
    pub fn rate_statement(&self, statement: &str) -> Result<(Rating, bool), RateError> {
        let key = CacheKey::new(statement, self.provider.id(), self.profile);
        if let Some(hit) = self.cache.get(&key) {
            return Ok((hit, true));
        }
        let prompt = build_prompt(self.profile, statement);
        let req = Request {
            prompt: &prompt,
            statement,
            profile: self.profile,
        };
        let mut last_transport = None;
        let mut any_reply = false;
        for attempt in 1..=MAX_ATTEMPTS {
            let outcome = self.provider.complete(&req);
            self.log(&prompt, &outcome);
            match outcome {
                Ok(text) => {
                    any_reply = true;
                    match parse_reply(&text) {
                        Ok(value) => {
                            let r = self.rating(statement, value, false);
                            self.cache.put(&r)?;
                            return Ok((r, false));
                        }
                        Err(e) => log::debug!("attempt {attempt} for `{statement}`: {e}"),
                    }
                }
                Err(ProviderError::Transport(m)) => {
                    log::debug!("attempt {attempt} for `{statement}`: {m}");
                    last_transport = Some(m);
                }
            }
        }
        if !any_reply {
            return Err(RateError::Transport {
                statement: statement.to_string(),
                message: last_transport.unwrap_or_default(),
            });
        }
        log::warn!("no usable rating for `{statement}`; defaulting to 0");
        let r = self.rating(statement, 0, true);
        self.cache.put(&r)?;
        Ok((r, false))
    }

    fn rating(&self, statement: &str, value: u8, flagged: bool) -> Rating {
        Rating {
            statement: statement.to_string(),
            value,
            provider: self.provider.id().to_string(),
            profile: self.profile,
            flagged,
        }
    }

    /// Rate every entry with at most `max_inflight` provider calls
    /// outstanding. Unreachable-provider statements become flagged zeros;
    /// the run fails when more than 10% of statements end up flagged.
    pub fn rate_all(&self, set: &StatementSet, max_inflight: usize) -> Result<RatingRun, RateError> {
        let texts: Vec<&str> = set.texts().collect();
        let next = AtomicUsize::new(0);
        let results: Mutex<Vec<(usize, Outcome)>> = Mutex::new(Vec::with_capacity(texts.len()));
        let workers = max_inflight.max(1).min(texts.len());
        std::thread::scope(|scope| {
            for _ in 0..workers {
                scope.spawn(|| loop {
                    let i = next.fetch_add(1, Ordering::SeqCst);
                    let Some(stmt) = texts.get(i) else { break };
                    let r = self.rate_statement(stmt);
                    results.lock().expect("results lock").push((i, r));
                });
            }
        });

        let mut results = results.into_inner().expect("results lock");
        results.sort_by_key(|(i, _)| *i);
        let mut run = RatingRun::default();
        for (i, r) in results {
            let rating = match r {
                Ok((rating, hit)) => {
                    if hit {
                        run.cache_hits += 1;
                    } else {
                        run.rated += 1;
                    }
                    rating
                }
                Err(RateError::Transport { statement, message }) => {
                    log::warn!("`{statement}` unrated: {message}");
                    run.rated += 1;
                    self.rating(texts[i], 0, true)
                }
                Err(e) => return Err(e),
            };
            if rating.flagged {
                run.flagged += 1;
            }
            run.ratings.insert(texts[i].to_string(), rating);
        }
        let total = texts.len();
        if total > 0 && run.flagged as f64 > FLAGGED_TOLERANCE * total as f64 {
            return Err(RateError::TooManyFlagged {
                flagged: run.flagged,
                total,
            });
        }
        Ok(run)
    }
}
