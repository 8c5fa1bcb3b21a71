pub mod casegen;
pub mod formulations;
pub mod lp;
pub mod model;
pub mod oracle;
pub mod par;
pub mod report;
pub mod stress;
pub mod verify;
