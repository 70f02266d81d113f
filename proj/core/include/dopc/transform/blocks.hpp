#pragma once

#include <map>

#include "dopc/diag.hpp"
#include "dopc/ir/asm.hpp"

namespace dopc::transform {

// Basic blocks over the instruction stream. IDs are dense positive integers
// in program order; the entry block has ID 1. Only referenced labels and
// control transfers split blocks.
struct BasicBlock {
    int id = 0;
    std::vector<size_t> items;   // indices of the block's instruction items
    std::vector<int> succs;      // successor block ids (empty = program exit)
    std::string label;           // label starting the block, if any
    bool has_terminator = false; // ends in goto (unconditional)
};

struct BasicBlockGraph {
    std::vector<BasicBlock> blocks;          // blocks[i].id == i + 1
    std::map<std::string, int> label_block;  // label name -> block id

    const BasicBlock& by_id(int id) const { return blocks.at(id - 1); }
};

BasicBlockGraph build_blocks(const ir::AsmProgram& prog);

// True iff every retreating edge in a depth-first walk targets a dominator
// (the classical reducibility condition).
bool reducible(const BasicBlockGraph& g);

}  // namespace dopc::transform
