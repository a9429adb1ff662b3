pub mod address;
pub mod backend_api;
pub mod arith;
pub mod block_ir;
pub mod guard_check;
pub mod codegen_c;
pub mod compiler_bridge;
pub mod examples;
pub mod hook_vm;
mod http;
pub mod mock_http;
pub mod xrpl_client;
