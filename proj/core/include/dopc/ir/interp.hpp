#pragma once

#include <map>

#include "dopc/diag.hpp"
#include "dopc/ir/asm.hpp"

namespace dopc::ir {

// Flat little-endian byte memory with named cells. Addresses are absolute;
// all accesses are bounds-checked against [base, base+size).
struct MemoryImage {
    uint64_t base = 0x10000;
    int pointer_width = 4;  // width of addresses read by load/store
    std::vector<uint8_t> bytes;
    std::map<std::string, std::pair<uint64_t, TypeTag>> symbols;  // name -> (absolute addr, type)

    bool in_range(uint64_t addr, uint64_t len) const {
        return addr >= base && addr + len <= base + bytes.size() && addr + len >= addr;
    }
    uint64_t read(uint64_t addr, int width) const;
    void write(uint64_t addr, int width, uint64_t value);
    void plant(uint64_t addr, const std::vector<uint8_t>& data);

    uint64_t addr_of(const std::string& sym) const;  // throws if unknown
    uint64_t get(const std::string& sym) const;      // read at symbol width
    void set(const std::string& sym, uint64_t value);
};

struct LayoutOptions {
    uint64_t base = 0x10000;
    uint64_t size = 1 << 20;
    int addr_width = 4;
};

// Assigns every declared variable, array and table a cell (sequential,
// aligned to its width), writes initial values and table contents.
MemoryImage layout_program(const AsmProgram& prog, const LayoutOptions& opts = {});

enum class RunStatus { Halted, FuelExhausted, Fault };

struct InterpResult {
    MemoryImage memory;
    RunStatus status = RunStatus::Halted;
    uint64_t executed = 0;
    std::string fault;  // set when status == Fault
};

constexpr uint64_t kDefaultFuel = 100000000;  // JIT-ROP scale runs execute tens of millions

// Reference semantics. Requires a fully expanded program (no $(...), no
// pending %once); fuel bounds the number of executed instructions and fuel
// exhaustion is reported distinctly from normal termination.
// Faults: out-of-bounds access, jump to undefined label, unexecutable opcode.
InterpResult interpret(const AsmProgram& prog, MemoryImage memory, uint64_t fuel = kDefaultFuel);

// layout + interpret in one step.
InterpResult run_program(const AsmProgram& prog, const LayoutOptions& opts = {},
                         uint64_t fuel = kDefaultFuel);

}  // namespace dopc::ir
