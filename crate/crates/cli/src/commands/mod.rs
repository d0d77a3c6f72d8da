pub mod evaluate;
pub mod harvest;
pub mod link;
pub mod schema;
