#include "klab/blc.hpp"

#include <algorithm>
#include <map>

namespace klab::blc {

TermPtr var(std::uint32_t index) {
  auto t = std::make_shared<Term>();
  t->kind = Term::Kind::kVar;
  t->index = index;
  t->size = 1;
  t->free_levels = index + 1;
  return t;
}

TermPtr lam(TermPtr body) {
  auto t = std::make_shared<Term>();
  t->kind = Term::Kind::kLam;
  t->size = body->size + 1;
  t->free_levels = body->free_levels > 0 ? body->free_levels - 1 : 0;
  t->left = std::move(body);
  return t;
}

TermPtr app(TermPtr f, TermPtr a) {
  auto t = std::make_shared<Term>();
  t->kind = Term::Kind::kApp;
  t->size = f->size + a->size + 1;
  t->free_levels = std::max(f->free_levels, a->free_levels);
  t->left = std::move(f);
  t->right = std::move(a);
  return t;
}

namespace {

void encode_into(const Term& t, Bitstring& out) {
  switch (t.kind) {
    case Term::Kind::kVar:
      out += Bitstring::repeat('1', t.index + 1);
      out.push_back(false);
      break;
    case Term::Kind::kLam:
      out += Bitstring("00");
      encode_into(*t.left, out);
      break;
    case Term::Kind::kApp:
      out += Bitstring("01");
      encode_into(*t.left, out);
      encode_into(*t.right, out);
      break;
  }
}

// Parses one term at `pos` with `depth` enclosing binders; free indices
// (index ≥ depth) make the parse fail.
std::optional<TermPtr> parse_at(const Bitstring& bits, std::size_t& pos, std::uint32_t depth) {
  if (pos >= bits.size()) return std::nullopt;
  if (bits[pos]) {
    std::uint32_t ones = 0;
    while (pos < bits.size() && bits[pos]) {
      ++ones;
      ++pos;
    }
    if (pos >= bits.size()) return std::nullopt;
    ++pos;
    if (ones - 1 >= depth) return std::nullopt;
    return var(ones - 1);
  }
  if (pos + 1 >= bits.size()) return std::nullopt;
  const bool is_app = bits[pos + 1];
  pos += 2;
  if (!is_app) {
    auto body = parse_at(bits, pos, depth + 1);
    if (!body) return std::nullopt;
    return lam(*body);
  }
  auto f = parse_at(bits, pos, depth);
  if (!f) return std::nullopt;
  auto a = parse_at(bits, pos, depth);
  if (!a) return std::nullopt;
  return app(*f, *a);
}

TermPtr shift(const TermPtr& t, std::uint32_t by, std::uint32_t cutoff) {
  if (by == 0 || t->free_levels <= cutoff) return t;
  switch (t->kind) {
    case Term::Kind::kVar:
      return var(t->index + by);
    case Term::Kind::kLam:
      return lam(shift(t->left, by, cutoff + 1));
    case Term::Kind::kApp:
      return app(shift(t->left, by, cutoff), shift(t->right, by, cutoff));
  }
  return t;
}

std::uint64_t occurrences(const TermPtr& t, std::uint32_t depth) {
  if (t->free_levels <= depth) return 0;
  switch (t->kind) {
    case Term::Kind::kVar:
      return t->index == depth ? 1 : 0;
    case Term::Kind::kLam:
      return occurrences(t->left, depth + 1);
    case Term::Kind::kApp:
      return occurrences(t->left, depth) + occurrences(t->right, depth);
  }
  return 0;
}

// body[0 := arg], lowering the remaining free indices of body.
TermPtr instantiate(const TermPtr& t, std::uint32_t depth, const TermPtr& arg) {
  if (t->free_levels <= depth) return t;
  switch (t->kind) {
    case Term::Kind::kVar:
      if (t->index == depth) return shift(arg, depth, 0);
      return var(t->index - 1);
    case Term::Kind::kLam:
      return lam(instantiate(t->left, depth + 1, arg));
    case Term::Kind::kApp:
      return app(instantiate(t->left, depth, arg), instantiate(t->right, depth, arg));
  }
  return t;
}

class Evaluator {
 public:
  explicit Evaluator(const Limits& limits) : limits_(limits) {}

  TermPtr normal_form(const TermPtr& t) {
    TermPtr h = head_normal(t);
    if (!h) return nullptr;
    switch (h->kind) {
      case Term::Kind::kVar:
        return h;
      case Term::Kind::kLam: {
        TermPtr body = normal_form(h->left);
        if (!body) return nullptr;
        return body == h->left ? h : lam(body);
      }
      case Term::Kind::kApp: {
        TermPtr f = normal_form(h->left);
        if (!f) return nullptr;
        TermPtr a = normal_form(h->right);
        if (!a) return nullptr;
        return (f == h->left && a == h->right) ? h : app(f, a);
      }
    }
    return nullptr;
  }

  std::uint64_t steps() const { return steps_; }

 private:
  TermPtr head_normal(TermPtr t) {
    while (t->kind == Term::Kind::kApp) {
      TermPtr f = head_normal(t->left);
      if (!f) return nullptr;
      if (f->kind != Term::Kind::kLam) return f == t->left ? t : app(f, t->right);
      if (++steps_ > limits_.max_steps) return nullptr;
      const std::uint64_t occ = occurrences(f->left, 0);
      if (f->left->size + occ * t->right->size > limits_.max_size) return nullptr;
      t = instantiate(f->left, 0, t->right);
    }
    return t;
  }

  Limits limits_;
  std::uint64_t steps_ = 0;
};

bool is_selector(const TermPtr& t, std::uint32_t index) {
  return t->kind == Term::Kind::kLam && t->left->kind == Term::Kind::kLam &&
         t->left->left->kind == Term::Kind::kVar && t->left->left->index == index;
}

}  // namespace

Bitstring encode(const TermPtr& t) {
  Bitstring out;
  encode_into(*t, out);
  return out;
}

std::optional<TermPtr> parse_closed(const Bitstring& program) {
  std::size_t pos = 0;
  auto t = parse_at(program, pos, 0);
  if (!t || pos != program.size()) return std::nullopt;
  return t;
}

TermPtr encode_bits(const Bitstring& bits) {
  static const TermPtr kNil = lam(lam(var(0)));
  static const TermPtr kZero = lam(lam(var(1)));
  static const TermPtr kOne = lam(lam(var(0)));
  TermPtr list = kNil;
  for (std::size_t i = bits.size(); i-- > 0;) {
    list = lam(app(app(var(0), bits[i] ? kOne : kZero), list));
  }
  return list;
}

std::optional<Bitstring> decode_bits(const TermPtr& term) {
  Bitstring out;
  TermPtr t = term;
  while (true) {
    if (is_selector(t, 0)) return out;
    if (t->kind != Term::Kind::kLam) return std::nullopt;
    const TermPtr& body = t->left;
    if (body->kind != Term::Kind::kApp || body->left->kind != Term::Kind::kApp) return std::nullopt;
    const TermPtr& head_app = body->left;
    if (head_app->left->kind != Term::Kind::kVar || head_app->left->index != 0) return std::nullopt;
    const TermPtr& h = head_app->right;
    const TermPtr& tail = body->right;
    if (h->free_levels != 0 || tail->free_levels != 0) return std::nullopt;
    if (is_selector(h, 1)) {
      out.push_back(false);
    } else if (is_selector(h, 0)) {
      out.push_back(true);
    } else {
      return std::nullopt;
    }
    t = tail;
  }
}

std::optional<Normalized> normalize(const TermPtr& t, const Limits& limits) {
  Evaluator ev(limits);
  TermPtr nf = ev.normal_form(t);
  if (!nf) return std::nullopt;
  return Normalized{nf, ev.steps()};
}

std::optional<Outcome> run(const TermPtr& program, const std::optional<Bitstring>& input,
                           const Limits& limits) {
  if (limits.max_steps == 0) return std::nullopt;
  Limits inner = limits;
  inner.max_steps = limits.max_steps - 1;
  auto nf = normalize(app(program, encode_bits(input.value_or(Bitstring()))), inner);
  if (!nf) return std::nullopt;
  auto bits = decode_bits(nf->term);
  if (!bits) return std::nullopt;
  return Outcome{*bits, nf->steps + 1};
}

std::vector<std::pair<Bitstring, TermPtr>> closed_terms_of_length(std::size_t length) {
  using Bucket = std::vector<std::pair<Bitstring, TermPtr>>;
  std::map<std::pair<std::uint32_t, std::size_t>, Bucket> memo;

  auto gen = [&](auto&& self, std::uint32_t depth, std::size_t len) -> const Bucket& {
    auto key = std::make_pair(depth, len);
    if (auto it = memo.find(key); it != memo.end()) return it->second;
    Bucket out;
    if (len >= 2) {
      const std::size_t index_plus_one = len - 1;  // 1^{i+1} 0
      if (index_plus_one <= depth) {
        out.emplace_back(Bitstring::repeat('1', index_plus_one) + Bitstring("0"),
                         var(static_cast<std::uint32_t>(index_plus_one - 1)));
      }
      for (const auto& [bits, body] : self(self, depth + 1, len - 2)) {
        out.emplace_back(Bitstring("00") + bits, lam(body));
      }
      for (std::size_t left = 2; left + 2 <= len - 2; ++left) {
        const Bucket& fs = self(self, depth, left);
        if (fs.empty()) continue;
        const Bucket& as = self(self, depth, len - 2 - left);
        for (const auto& [fb, f] : fs) {
          for (const auto& [ab, a] : as) out.emplace_back(Bitstring("01") + fb + ab, app(f, a));
        }
      }
    }
    return memo.emplace(key, std::move(out)).first->second;
  };

  Bucket result = gen(gen, 0, length);
  std::sort(result.begin(), result.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  return result;
}

}  // namespace klab::blc
