//! Plateau learning-rate decay: reduce by a fixed factor whenever the
//! validation loss has not strictly improved for `patience` consecutive
//! completed epochs.

#[derive(Debug, Clone)]
pub struct PlateauScheduler {
    pub patience: usize,
    pub factor: f64,
    best: f64,
    bad_epochs: usize,
}

impl PlateauScheduler {
    pub fn new(patience: usize, factor: f64) -> Self {
        assert!(patience > 0);
        assert!(factor > 0.0 && factor < 1.0);
        PlateauScheduler {
            patience,
            factor,
            best: f64::INFINITY,
            bad_epochs: 0,
        }
    }

    /// Observe one completed epoch's validation loss; returns the learning
    /// rate for the next epoch. The patience counter resets on each decay.
    pub fn observe(&mut self, val_loss: f64, current_lr: f64) -> f64 {
        if val_loss < self.best {
            self.best = val_loss;
            self.bad_epochs = 0;
            current_lr
        } else {
            self.bad_epochs += 1;
            if self.bad_epochs == self.patience {
                self.bad_epochs = 0;
                current_lr * self.factor
            } else {
                current_lr
            }
        }
    }
}

/// Learning rate in effect during each epoch, given the per-epoch validation
/// losses. Entry 0 is `lr0`; later entries reflect plateau decays.
pub fn lr_trace(val_losses: &[f64], lr0: f64, patience: usize, factor: f64) -> Vec<f64> {
    let mut sched = PlateauScheduler::new(patience, factor);
    let mut lr = lr0;
    let mut trace = Vec::with_capacity(val_losses.len());
    for &loss in val_losses {
        trace.push(lr);
        lr = sched.observe(loss, lr);
    }
    trace
}
