//! Hybrid tourism-demand style forecasting: empirical wavelet
//! decomposition, game-theoretic opinion-leader detection on interaction
//! graphs, a from-scratch stacked bidirectional LSTM, and Gaussian-process
//! Bayesian hyperparameter search, wired together by a file-based pipeline.

pub mod ewt;
pub mod forecaster;
pub mod hyperopt;
pub mod leaders;
pub mod pipeline;
pub mod seeds;
pub mod series;
