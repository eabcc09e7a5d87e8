//! Traffic microsimulation and signal-control optimization.
//!
//! [`netmodel`] describes road networks and demand, [`simcore`] moves
//! vehicles through them, [`controllers`] decide what each light shows,
//! [`nash`] tunes controller parameters by stochastic hillclimbing and
//! [`calibrate`] fits static plans to observed journey times.
//! [`scenarios`] generates synthetic networks and demand.

pub mod calibrate;
pub mod controllers;
pub mod nash;
pub mod netmodel;
pub mod objective;
pub mod scenarios;
pub mod simcore;
pub mod vehicle;
