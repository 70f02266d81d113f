#include "dopc/ir/interp.hpp"

#include "dopc/ir/macro.hpp"
#include "dopc/ir/tables.hpp"

namespace dopc::ir {

uint64_t MemoryImage::read(uint64_t addr, int width) const {
    if (!in_range(addr, width)) throw Error(Stage::Run, "out-of-bounds read at " + std::to_string(addr));
    uint64_t v = 0;
    for (int i = width - 1; i >= 0; i--) v = (v << 8) | bytes[addr - base + i];
    return v;
}

void MemoryImage::write(uint64_t addr, int width, uint64_t value) {
    if (!in_range(addr, width))
        throw Error(Stage::Run, "out-of-bounds write at " + std::to_string(addr));
    for (int i = 0; i < width; i++) bytes[addr - base + i] = static_cast<uint8_t>(value >> (8 * i));
}

void MemoryImage::plant(uint64_t addr, const std::vector<uint8_t>& data) {
    if (!in_range(addr, data.size()))
        throw Error(Stage::Run, "plant outside memory at " + std::to_string(addr));
    std::copy(data.begin(), data.end(), bytes.begin() + (addr - base));
}

uint64_t MemoryImage::addr_of(const std::string& sym) const {
    auto it = symbols.find(sym);
    if (it == symbols.end()) throw Error(Stage::Run, "unknown symbol '" + sym + "'");
    return it->second.first;
}

uint64_t MemoryImage::get(const std::string& sym) const {
    auto it = symbols.find(sym);
    if (it == symbols.end()) throw Error(Stage::Run, "unknown symbol '" + sym + "'");
    return read(it->second.first, it->second.second.width_bytes);
}

void MemoryImage::set(const std::string& sym, uint64_t value) {
    auto it = symbols.find(sym);
    if (it == symbols.end()) throw Error(Stage::Run, "unknown symbol '" + sym + "'");
    write(it->second.first, it->second.second.width_bytes, value);
}

MemoryImage layout_program(const AsmProgram& prog, const LayoutOptions& opts) {
    MemoryImage mem;
    mem.base = opts.base;
    mem.pointer_width = opts.addr_width;
    mem.bytes.assign(opts.size, 0);
    uint64_t cursor = opts.base;
    auto align_to = [&](uint64_t a) {
        if (a > 1) cursor = (cursor + a - 1) / a * a;
    };
    // first pass: addresses (so `= &name` may reference forward symbols)
    for (const auto& it : prog.items) {
        if (const auto* d = std::get_if<VarDecl>(&it)) {
            TypeTag t = d->type;
            if (t.kind == TypeKind::Addr && t.width_bytes == 0) t.width_bytes = opts.addr_width;
            align_to(t.width_bytes);
            uint64_t len = t.width_bytes * (d->array_len ? d->array_len : 1);
            if (cursor + len > opts.base + opts.size)
                throw Error(Stage::Run, "program does not fit in memory image");
            mem.symbols[d->name] = {cursor, t};
            cursor += len;
        } else if (const auto* td = std::get_if<TableDecl>(&it)) {
            if (mem.symbols.count(td->name)) continue;  // tables dedupe by name
            auto spec = make_table(td->generator);
            if (!spec) throw Error(Stage::Run, "unknown table generator '" + td->generator + "'");
            align_to(spec->alignment);
            if (cursor + spec->size_bytes() > opts.base + opts.size)
                throw Error(Stage::Run, "program does not fit in memory image");
            mem.symbols[td->name] = {cursor, TypeTag{TypeKind::Byte, 1}};
            mem.plant(cursor, spec->bytes);
            cursor += spec->size_bytes();
        } else if (const auto* e = std::get_if<ExternDecl>(&it)) {
            // reference interpretation has no target: give externs a plain cell
            align_to(opts.addr_width);
            mem.symbols[e->name] = {cursor, TypeTag::addr_(opts.addr_width)};
            cursor += opts.addr_width;
        }
    }
    // second pass: initial values
    for (const auto& it : prog.items) {
        const auto* d = std::get_if<VarDecl>(&it);
        if (!d) continue;
        auto [addr, t] = mem.symbols.at(d->name);
        if (d->init) mem.write(addr, t.width_bytes, *d->init);
        if (d->init_sym) mem.write(addr, t.width_bytes, mem.addr_of(*d->init_sym));
        if (!d->array_init.empty()) {
            std::vector<uint8_t> b = d->array_init;
            b.resize(t.width_bytes * d->array_len, 0);
            mem.plant(addr, b);
        }
    }
    return mem;
}

namespace {

struct Machine {
    const AsmProgram& prog;
    MemoryImage& mem;
    std::map<std::string, size_t> labels;  // label -> item index of the definition

    uint64_t cell_addr(const Operand& op) {
        return mem.addr_of(op.name) + op.offset;
    }

    int width_of_symbol(const Operand& op) {
        auto it = mem.symbols.find(op.name);
        if (it == mem.symbols.end()) throw Error(Stage::Run, "unknown symbol '" + op.name + "'");
        return it->second.second.width_bytes;
    }

    // value of a CellOrImm operand at the given width
    uint64_t value(const Operand& op, int width) {
        switch (op.kind) {
            case Operand::Kind::Imm:
                return mask_width(op.imm, width);
            case Operand::Kind::AddrOf:
                return mask_width(cell_addr(op), width);
            case Operand::Kind::Var:
                return mem.read(cell_addr(op), width);
            default:
                throw Error(Stage::Run, "operand kind not valid here");
        }
    }

    // pointer held by a load/store pointer operand: an immediate or &sym is
    // itself the pointer, a variable holds it
    uint64_t pointer(const Operand& op) {
        switch (op.kind) {
            case Operand::Kind::Imm:
                return op.imm;
            case Operand::Kind::AddrOf:
                return cell_addr(op);
            case Operand::Kind::Var:
                return mem.read(cell_addr(op), mem.pointer_width);
            default:
                throw Error(Stage::Run, "operand kind not valid here");
        }
    }
};

}  // namespace

InterpResult interpret(const AsmProgram& prog, MemoryImage memory, uint64_t fuel) {
    InterpResult res;
    res.memory = std::move(memory);
    if (!fully_expanded(prog)) {
        res.status = RunStatus::Fault;
        res.fault = "program contains unexpanded macros";
        return res;
    }
    Machine m{prog, res.memory, {}};
    for (size_t i = 0; i < prog.items.size(); i++)
        if (const auto* l = std::get_if<LabelDef>(&prog.items[i])) {
            if (m.labels.count(l->name)) {
                res.status = RunStatus::Fault;
                res.fault = "label ':" + l->name + "' defined twice";
                return res;
            }
            m.labels[l->name] = i;
        }

    size_t pc = 0;
    try {
        while (pc < prog.items.size()) {
            const auto* ins = std::get_if<Instruction>(&prog.items[pc]);
            if (!ins) {
                pc++;
                continue;
            }
            if (res.executed >= fuel) {
                res.status = RunStatus::FuelExhausted;
                return res;
            }
            res.executed++;
            const int w = ins->width.width_bytes;
            const auto& ops = ins->operands;
            const std::string& op = ins->opcode;
            auto jump = [&](const std::string& label) {
                auto it = m.labels.find(label);
                if (it == m.labels.end())
                    throw Error(Stage::Run, "jump to undefined label ':" + label + "'");
                pc = it->second;
            };
            auto dst_addr = [&](size_t k) { return m.cell_addr(ops[k]); };
            auto wr = [&](uint64_t addr, uint64_t v) { res.memory.write(addr, w, mask_width(v, w)); };
            auto rd = [&](uint64_t addr) { return res.memory.read(addr, w); };

            bool fallthrough = true;
            if (op == "mov") {
                wr(dst_addr(0), m.value(ops[1], w));
            } else if (op == "load") {
                wr(dst_addr(0), res.memory.read(m.pointer(ops[1]), w));
            } else if (op == "store") {
                res.memory.write(m.pointer(ops[0]), w, m.value(ops[1], w));
            } else if (op == "add") {
                wr(dst_addr(0), rd(dst_addr(0)) + m.value(ops[1], w));
            } else if (op == "sub") {
                wr(dst_addr(0), rd(dst_addr(0)) - m.value(ops[1], w));
            } else if (op == "mul") {
                wr(dst_addr(0), rd(dst_addr(0)) * m.value(ops[1], w));
            } else if (op == "and") {
                wr(dst_addr(0), rd(dst_addr(0)) & m.value(ops[1], w));
            } else if (op == "or") {
                wr(dst_addr(0), rd(dst_addr(0)) | m.value(ops[1], w));
            } else if (op == "inc") {
                wr(dst_addr(0), rd(dst_addr(0)) + 1);
            } else if (op == "dec") {
                wr(dst_addr(0), rd(dst_addr(0)) - 1);
            } else if (op == "neg") {
                wr(dst_addr(0), ~rd(dst_addr(0)) + 1);
            } else if (op == "not") {
                wr(dst_addr(0), rd(dst_addr(0)) == 0 ? 1 : 0);
            } else if (op == "gte") {
                wr(dst_addr(0), rd(dst_addr(0)) >= m.value(ops[1], w) ? 1 : 0);
            } else if (op == "lt") {
                wr(dst_addr(0), rd(dst_addr(0)) < m.value(ops[1], w) ? 1 : 0);
            } else if (op == "eq") {
                wr(dst_addr(0), rd(dst_addr(0)) == m.value(ops[1], w) ? 1 : 0);
            } else if (op == "neq") {
                wr(dst_addr(0), rd(dst_addr(0)) != m.value(ops[1], w) ? 1 : 0);
            } else if (op == "mov8to32" || op == "mov8to64" || op == "mov16to32" ||
                       op == "mov16to64" || op == "mov32to64") {
                int from = op[3] == '8' ? 1 : op[3] == '1' ? 2 : 4;
                int to = op.back() == '2' ? 4 : 8;
                res.memory.write(m.cell_addr(ops[0]), to, res.memory.read(m.cell_addr(ops[1]), from));
            } else if (op == "goto") {
                jump(ops[0].name);
                fallthrough = false;
            } else if (op == "if_zero_goto") {
                if (rd(dst_addr(0)) == 0) {
                    jump(ops[1].name);
                    fallthrough = false;
                }
            } else if (op == "cond_mov") {
                if (rd(dst_addr(0)) != 0) wr(dst_addr(1), m.value(ops[2], w));
            } else if (op == "cond_load") {
                if (rd(dst_addr(0)) != 0) wr(dst_addr(1), res.memory.read(m.pointer(ops[2]), w));
            } else if (op == "cond_store") {
                if (rd(dst_addr(0)) != 0)
                    res.memory.write(m.pointer(ops[1]), w, m.value(ops[2], w));
            } else if (op == "cond_add") {
                if (rd(dst_addr(0)) != 0) wr(dst_addr(1), rd(dst_addr(1)) + m.value(ops[2], w));
            } else if (op == "cond_sub") {
                if (rd(dst_addr(0)) != 0) wr(dst_addr(1), rd(dst_addr(1)) - m.value(ops[2], w));
            } else if (op == "cond_mul") {
                if (rd(dst_addr(0)) != 0) wr(dst_addr(1), rd(dst_addr(1)) * m.value(ops[2], w));
            } else if (op == "cond_and") {
                if (rd(dst_addr(0)) != 0) wr(dst_addr(1), rd(dst_addr(1)) & m.value(ops[2], w));
            } else if (op == "cond_or") {
                if (rd(dst_addr(0)) != 0) wr(dst_addr(1), rd(dst_addr(1)) | m.value(ops[2], w));
            } else if (op == "cond_gte") {
                if (rd(dst_addr(0)) != 0)
                    wr(dst_addr(1), rd(dst_addr(1)) >= m.value(ops[2], w) ? 1 : 0);
            } else if (op == "cond_eq") {
                if (rd(dst_addr(0)) != 0)
                    wr(dst_addr(1), rd(dst_addr(1)) == m.value(ops[2], w) ? 1 : 0);
            } else if (op == "cond_neq") {
                if (rd(dst_addr(0)) != 0)
                    wr(dst_addr(1), rd(dst_addr(1)) != m.value(ops[2], w) ? 1 : 0);
            } else if (op == "cond_lt") {
                if (rd(dst_addr(0)) != 0)
                    wr(dst_addr(1), rd(dst_addr(1)) < m.value(ops[2], w) ? 1 : 0);
            } else if (op == "cond_inc") {
                if (rd(dst_addr(0)) != 0) wr(dst_addr(1), rd(dst_addr(1)) + 1);
            } else if (op == "cond_dec") {
                if (rd(dst_addr(0)) != 0) wr(dst_addr(1), rd(dst_addr(1)) - 1);
            } else {
                throw Error(Stage::Run, "opcode '" + ins->mnemonic() +
                                            "' has no reference semantics (target-specific)");
            }
            if (fallthrough) pc++;
        }
    } catch (const Error& e) {
        res.status = RunStatus::Fault;
        res.fault = e.what();
        return res;
    }
    res.status = RunStatus::Halted;
    return res;
}

InterpResult run_program(const AsmProgram& prog, const LayoutOptions& opts, uint64_t fuel) {
    return interpret(prog, layout_program(prog, opts), fuel);
}

}  // namespace dopc::ir
