use std::collections::VecDeque;

use super::{fuse_frames, FusionConfig, Frame};
use crate::error::{Error, Result};

/// Keeps the trailing `N + 1` raw frames of a stream and fuses on every push.
#[derive(Debug, Clone)]
pub struct SlidingFuser {
    cfg: FusionConfig,
    window: VecDeque<Frame>,
}

impl SlidingFuser {
    pub fn new(cfg: FusionConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(Self {
            cfg,
            window: VecDeque::with_capacity(cfg.n_history + 1),
        })
    }

    pub fn config(&self) -> &FusionConfig {
        &self.cfg
    }

    /// Adds the next raw frame and returns the fused view of it.
    pub fn push(&mut self, frame: Frame) -> Result<Frame> {
        if let Some(prev) = self.window.back() {
            if !(frame.timestamp > prev.timestamp) {
                return Err(Error::NonMonotoneTimestamps {
                    prev: prev.timestamp,
                    next: frame.timestamp,
                });
            }
        }
        if self.window.len() == self.cfg.n_history + 1 {
            self.window.pop_front();
        }
        self.window.push_back(frame);
        fuse_frames(self.window.make_contiguous(), &self.cfg)
    }

    pub fn reset(&mut self) {
        self.window.clear();
    }
}

/// Iterator returned by [`fuse_sequence`].
pub struct FuseSequence<I> {
    frames: I,
    fuser: SlidingFuser,
}

impl<I: Iterator<Item = Frame>> Iterator for FuseSequence<I> {
    type Item = Result<Frame>;

    fn next(&mut self) -> Option<Self::Item> {
        let frame = self.frames.next()?;
        Some(self.fuser.push(frame))
    }
}

/// Lazily fuses each frame of `frames` with up to `N` raw predecessors.
pub fn fuse_sequence<I>(frames: I, cfg: &FusionConfig) -> Result<FuseSequence<I::IntoIter>>
where
    I: IntoIterator<Item = Frame>,
{
    Ok(FuseSequence {
        frames: frames.into_iter(),
        fuser: SlidingFuser::new(*cfg)?,
    })
}
