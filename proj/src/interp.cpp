#include "tdforge/interp.hpp"

#include <optional>
#include <stdexcept>

#include "tdforge/eval.hpp"

namespace tdforge {

std::string_view to_string(AcceptMode mode) {
  return mode == AcceptMode::kStrict ? "strict" : "prefix";
}

std::string_view to_string(FailureReason reason) {
  switch (reason) {
    case FailureReason::kInsufficientInput: return "InsufficientInput";
    case FailureReason::kConstraintViolated: return "ConstraintViolated";
    case FailureReason::kNoCaseMatched: return "NoCaseMatched";
    case FailureReason::kEnumOutOfRange: return "EnumOutOfRange";
    case FailureReason::kTrailingBytes: return "TrailingBytes";
  }
  return "?";
}

const BigInt* ParseOutcome::binding(std::string_view path) const {
  if (!succeeded()) return nullptr;
  for (const auto& [name, value] : success().bindings) {
    if (name == path) return &value;
  }
  return nullptr;
}

std::string describe(const ParseOutcome& outcome) {
  if (outcome.succeeded()) {
    std::string s = "Success consumed=" + std::to_string(outcome.success().consumed);
    for (const auto& [name, value] : outcome.success().bindings) s += " " + name + "=" + value.str();
    return s;
  }
  const ParseFailure& f = outcome.failure();
  std::string s = "Failure " + std::string(to_string(f.reason));
  if (!f.where.empty()) s += "(" + f.where + ")";
  return s + " at " + std::to_string(f.offset);
}

namespace {

bool holds(const EvalResult& r) {
  return ok(r) && std::get<Value>(r).is_bool() && std::get<Value>(r).as_bool();
}

class Interpreter {
 public:
  Interpreter(const Spec& spec, std::span<const std::uint8_t> input, std::size_t pos)
      : spec_(spec), input_(input), pos_(pos) {}

  std::optional<ParseFailure> run(const TypeDef& def, std::span<const BigInt> args) {
    return parse_def(def, args, "", def.name);
  }

  std::size_t pos() const { return pos_; }
  Bindings take_bindings() { return std::move(bindings_); }

 private:
  ParseFailure fail(FailureReason reason, std::string where) const {
    return ParseFailure{reason, std::move(where), pos_};
  }

  std::optional<BigInt> read(IntKind kind) {
    std::size_t n = static_cast<std::size_t>(kind.bytes());
    if (input_.size() - pos_ < n) return std::nullopt;
    BigInt v = decode_int(input_.subspan(pos_, n), kind);
    pos_ += n;
    return v;
  }

  /// `scalar_name` is the path used when `def` itself is read as a scalar
  /// (an enum-typed field, or an enum entry point).
  std::optional<ParseFailure> parse_def(const TypeDef& def, std::span<const BigInt> args,
                                        const std::string& prefix, const std::string& scalar_name) {
    Env env(&spec_.enum_constants());
    for (std::size_t i = 0; i < def.params.size(); ++i) env.bind(def.params[i].name, args[i]);

    if (const auto* s = std::get_if<StructBody>(&def.body)) {
      for (const FieldGroup& g : group_fields(s->fields)) {
        auto failure = g.bitfields ? parse_bits(s->fields, g, env, prefix)
                                   : parse_field(s->fields[g.first], env, prefix);
        if (failure) return failure;
      }
      return std::nullopt;
    }
    if (const auto* c = std::get_if<CasetypeBody>(&def.body)) {
      EvalResult scrutinee = eval_expr(env, c->scrutinee);
      if (ok(scrutinee)) {
        const BigInt& tag = std::get<Value>(scrutinee).as_int();
        for (const auto& arm : c->cases) {
          if (arm.tag == tag) return parse_field(arm.field, env, prefix);
        }
      }
      return fail(FailureReason::kNoCaseMatched, def.name);
    }
    if (const auto* e = std::get_if<EnumBody>(&def.body)) {
      auto v = read(e->underlying);
      if (!v) return fail(FailureReason::kInsufficientInput, scalar_name);
      bool member = false;
      for (const auto& k : e->constants) member = member || k.value == *v;
      bindings_.emplace_back(scalar_name, *v);
      if (!member) return fail(FailureReason::kEnumOutOfRange, scalar_name);
      return std::nullopt;
    }
    return std::nullopt;   // unit alias
  }

  std::optional<ParseFailure> check_constraint(const FieldDecl& f, Env& env, const std::string& path) {
    if (f.constraint && !holds(eval_expr(env, *f.constraint))) {
      return fail(FailureReason::kConstraintViolated, path);
    }
    return std::nullopt;
  }

  std::optional<ParseFailure> parse_bits(const std::vector<FieldDecl>& fields, const FieldGroup& g,
                                         Env& env, const std::string& prefix) {
    const IntKind kind = fields[g.first].type.int_kind;
    auto container = read(kind);
    if (!container) return fail(FailureReason::kInsufficientInput, prefix + fields[g.first].name);
    int used = 0;
    for (std::size_t i = g.first; i < g.first + g.count; ++i) {
      int width = *fields[i].bitwidth;
      used += width;
      BigInt v = (*container >> (kind.bits - used)) & ((BigInt(1) << width) - 1);
      env.bind(fields[i].name, v);
      bindings_.emplace_back(prefix + fields[i].name, v);
    }
    for (std::size_t i = g.first; i < g.first + g.count; ++i) {
      if (auto failure = check_constraint(fields[i], env, prefix + fields[i].name)) return failure;
    }
    return std::nullopt;
  }

  std::optional<ParseFailure> parse_field(const FieldDecl& f, Env& env, const std::string& prefix) {
    const std::string path = prefix + f.name;

    if (f.array != ArrayForm::kNone) {
      BigInt length;
      if (f.array == ArrayForm::kConsumeAll) {
        length = input_.size() - pos_;
      } else {
        EvalResult n = eval_expr(env, *f.array_size);
        if (!ok(n)) return fail(FailureReason::kConstraintViolated, path);
        length = std::get<Value>(n).as_int();
        if (length > input_.size() - pos_) return fail(FailureReason::kInsufficientInput, path);
      }
      pos_ += length.convert_to<std::size_t>();
      env.bind(f.name, length);
      bindings_.emplace_back(path, length);
      return std::nullopt;
    }

    switch (f.type.kind) {
      case TypeRef::Kind::kUnit:
        return std::nullopt;
      case TypeRef::Kind::kInt: {
        auto v = read(f.type.int_kind);
        if (!v) return fail(FailureReason::kInsufficientInput, path);
        env.bind(f.name, *v);
        bindings_.emplace_back(path, *v);
        return check_constraint(f, env, path);
      }
      case TypeRef::Kind::kNamed:
        break;
    }

    const TypeDef& target = *spec_.find(f.type.name);
    if (target.is_enum()) {
      std::size_t before = bindings_.size();
      if (auto failure = parse_def(target, {}, prefix, path)) return failure;
      env.bind(f.name, bindings_[before].second);
      return check_constraint(f, env, path);
    }

    std::vector<BigInt> args;
    for (const auto& a : f.type.args) {
      EvalResult v = eval_expr(env, a);
      if (!ok(v)) return fail(FailureReason::kConstraintViolated, path);
      args.push_back(std::get<Value>(v).as_int());
    }
    return parse_def(target, args, path + ".", path);
  }

  const Spec& spec_;
  std::span<const std::uint8_t> input_;
  std::size_t pos_;
  Bindings bindings_;
};

}  // namespace

ParseOutcome parse_type(const Spec& spec, std::string_view type_name, std::span<const BigInt> args,
                        std::span<const std::uint8_t> input, std::size_t pos) {
  const TypeDef* def = spec.find(type_name);
  if (def == nullptr) throw std::invalid_argument("unknown type '" + std::string(type_name) + "'");
  if (args.size() != def->params.size()) {
    throw std::invalid_argument("wrong number of arguments for '" + def->name + "'");
  }
  if (pos > input.size()) throw std::out_of_range("start offset beyond input");
  Interpreter interp(spec, input, pos);
  if (auto failure = interp.run(*def, args)) return *failure;
  return ParseSuccess{interp.pos() - pos, interp.take_bindings()};
}

Validation validate(const Spec& spec, std::span<const std::uint8_t> input, AcceptMode mode) {
  ParseOutcome outcome = parse_type(spec, spec.entry(), {}, input, 0);
  if (!outcome.succeeded()) return {false, std::move(outcome)};
  if (mode == AcceptMode::kStrict && outcome.success().consumed != input.size()) {
    return {false, ParseFailure{FailureReason::kTrailingBytes, "", outcome.success().consumed}};
  }
  return {true, std::move(outcome)};
}

}  // namespace tdforge
