use std::time::Duration;

use crate::clock::Clock;
use crate::tokenizer::Tokenizer;

use super::{EngineError, Sampler, SamplerSpec, Transformer};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GenerateOptions {
    /// Maximum sequence length including the prompt tokens (and BOS).
    pub steps: usize,
    pub sampler: SamplerSpec,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GenerationResult {
    /// Encoded prompt, BOS included.
    pub prompt_tokens: Vec<u32>,
    /// Sampled tokens, excluding the prompt and any terminating EOS.
    pub tokens: Vec<u32>,
    /// Decoded text of `tokens`.
    pub text: String,
    pub first_token_time: Duration,
    pub last_token_time: Duration,
    pub tokens_emitted: usize,
}

impl GenerationResult {
    pub fn elapsed(&self) -> Duration {
        self.last_token_time - self.first_token_time
    }
}

/// Feeds the prompt through the model, then samples until EOS or until the
/// sequence reaches `steps` tokens.
///
/// `on_token(prev, next)` fires for every token after the first, prompt
/// tokens included, in order. The clock is read exactly once per sampled
/// token, right after sampling; with no sampled tokens it is read once at the
/// end and both timestamps take that value.
pub fn generate(
    transformer: &Transformer<'_>,
    tokenizer: &Tokenizer,
    prompt: &str,
    options: &GenerateOptions,
    clock: &dyn Clock,
    mut on_token: impl FnMut(u32, u32),
) -> Result<GenerationResult, EngineError> {
    let config = transformer.config();
    if tokenizer.vocab_size() != config.vocab_size {
        return Err(EngineError::VocabMismatch {
            tokenizer: tokenizer.vocab_size(),
            model: config.vocab_size,
        });
    }
    if options.steps > config.seq_len {
        return Err(EngineError::StepsTooLarge {
            steps: options.steps,
            seq_len: config.seq_len,
        });
    }
    let prompt_tokens = tokenizer.encode(prompt, true, false);
    if prompt_tokens.len() >= config.seq_len {
        return Err(EngineError::PromptTooLong {
            tokens: prompt_tokens.len(),
            seq_len: config.seq_len,
        });
    }

    let mut state = transformer.new_state();
    let mut sampler = Sampler::new(options.sampler);
    let mut tokens = Vec::new();
    let mut text = Vec::new();
    let (mut first, mut last) = (None, None);

    let mut token = prompt_tokens[0];
    let mut pos = 0;
    while pos + 1 < options.steps {
        let logits = transformer.forward(&mut state, token, pos)?;
        let next = if pos + 1 < prompt_tokens.len() {
            prompt_tokens[pos + 1]
        } else {
            let next = sampler.sample(logits);
            if next == tokenizer.eos_id() {
                break;
            }
            let now = clock.now();
            first.get_or_insert(now);
            last = Some(now);
            tokens.push(next);
            text.extend_from_slice(tokenizer.decode(token, next)?);
            next
        };
        on_token(token, next);
        token = next;
        pos += 1;
    }

    let (first_token_time, last_token_time) = match (first, last) {
        (Some(f), Some(l)) => (f, l),
        _ => {
            let now = clock.now();
            (now, now)
        }
    };
    Ok(GenerationResult {
        prompt_tokens,
        tokens_emitted: tokens.len(),
        tokens,
        text: String::from_utf8_lossy(&text).into_owned(),
        first_token_time,
        last_token_time,
    })
}
