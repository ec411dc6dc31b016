#![allow(dead_code)]

pub mod conservation;
pub mod golden;
pub mod oracle;
pub mod phenomenology;
pub mod props;
