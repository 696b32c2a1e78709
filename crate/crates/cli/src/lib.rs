//! Front ends for `tr`: static checks, net compilation, headless runs and the
//! websocket control service.

pub mod commands;
pub mod protocol;
pub mod serve;
