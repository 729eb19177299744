//! Semi-supervised adversarial fine-tuning: a generator of fake
//! representations, a (k+1)-class discriminator, their losses and the
//! training loop.

mod config;
mod joint;
mod loss;
mod model;
mod networks;
mod train;

pub use config::GanConfig;
pub use joint::{Batch, ForwardState, GradTargets, LossTermKind, SsGan};
pub use loss::{
    loss_discriminator, loss_generator, DiscriminatorLoss, FeatureMatching, GeneratorLoss,
    LossBreakdown, LossTerm,
};
pub use model::{
    argmax_label, real_class_probs, EpochRecord, Prediction, TrainedModel, TrainingHistory,
    CONFIG_FILE, DISCRIMINATOR_FILE, ENCODER_DIR, HISTORY_FILE, LABELS_FILE, LOGIT_ORDER,
};
pub use networks::{Discriminator, DiscriminatorOutput, Generator, Mlp, MlpCache};
pub use train::{init_networks, train, StepRecord, Trainer};
