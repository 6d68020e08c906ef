pub mod corpus;
pub mod deps;
pub mod lang;
pub mod moments;
pub mod normalize;
pub mod oracle;
pub mod pipeline;
pub mod sensitivity;
pub mod solver;
pub mod symbolic;
