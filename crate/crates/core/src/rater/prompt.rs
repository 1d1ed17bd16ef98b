//! Prompt template, malicious-goal profiles and reply parsing.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

const PREAMBLE: &str = "I want you to act as a security critical code statement identifier. \
I will type a code statement and you will reply with a criticalness rating from 0 to 10 of the code statement. \
0 is the least level of criticalness. \
Only reply with the criticalness rating and do not write explanation.";

const GOAL_INTRO: &str = "Regarding what is a critical code statement, when it is tampered, it may result in:";

pub const GOALS: [&str; 5] = [
    "One can bypass authentication and/or authorization",
    "One can achieve behaviors that are being banned",
    "One can gain elevated privileges (uid changes)",
    "One can access files/data that are not accessible (chown related)",
    "One can steal secrets (keys, passwd, etc.)",
];

/// How much of the goal list the prompt carries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum PromptProfile {
    #[default]
    Full,
    /// Only the file-access and secret-stealing goals.
    Partial,
    None,
}

impl PromptProfile {
    pub const ALL: [PromptProfile; 3] = [PromptProfile::Full, PromptProfile::Partial, PromptProfile::None];

    pub fn as_str(self) -> &'static str {
        match self {
            PromptProfile::Full => "full",
            PromptProfile::Partial => "partial",
            PromptProfile::None => "none",
        }
    }

    pub fn goals(self) -> &'static [&'static str] {
        match self {
            PromptProfile::Full => &GOALS,
            PromptProfile::Partial => &GOALS[3..],
            PromptProfile::None => &[],
        }
    }
}

impl fmt::Display for PromptProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PromptProfile {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "full" => Ok(PromptProfile::Full),
            "partial" => Ok(PromptProfile::Partial),
            "none" => Ok(PromptProfile::None),
            _ => Err(format!("unknown prompt profile `{s}` (expected full, partial or none)")),
        }
    }
}

/// The complete single-statement prompt. The statement always comes last,
/// after a blank line.
pub fn build_prompt(profile: PromptProfile, statement: &str) -> String {
    let mut out = String::from(PREAMBLE);
    let goals = profile.goals();
    if !goals.is_empty() {
        out.push(' ');
        out.push_str(GOAL_INTRO);
        for (i, g) in goals.iter().enumerate() {
            out.push_str(&format!("\n{}. {}", i + 1, g));
        }
    }
    out.push_str("\n\n");
    out.push_str(statement);
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("reply contains no integer: {0:?}")]
    NoInteger(String),
    #[error("rating {0} is outside 0..10")]
    OutOfRange(String),
}

/// First decimal integer in a reply, if it lies in 0..=10.
pub fn parse_reply(text: &str) -> Result<u8, ParseError> {
    let bytes = text.as_bytes();
    let Some(start) = bytes.iter().position(u8::is_ascii_digit) else {
        return Err(ParseError::NoInteger(text.to_string()));
    };
    let end = bytes[start..]
        .iter()
        .position(|b| !b.is_ascii_digit())
        .map_or(bytes.len(), |n| start + n);
    let negative = start > 0 && bytes[start - 1] == b'-';
    let digits = &text[start..end];
    let token = if negative {
        format!("-{digits}")
    } else {
        digits.to_string()
    };
    match digits.parse::<u32>() {
        Ok(v) if !negative && v <= 10 => Ok(v as u8),
        _ => Err(ParseError::OutOfRange(token)),
    }
}
