#include <cctype>
#include <sstream>

#include "bargain/errors.hpp"
#include "bargain/scenario.hpp"

namespace bargain {

namespace {

std::string lower(std::string_view text) {
  std::string out(text);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

// "Camera" -> "cameras", "Soccer Ball" -> "soccer balls".
std::string plural_noun(std::string_view category) {
  std::string out = lower(category);
  if (!out.empty() && out.back() != 's') out += 's';
  return out;
}

std::string buyer_inventory(const Scenario& s) {
  std::ostringstream out;
  out << "Inventory List:\n";
  int index = 1;
  for (const auto& p : s.products) {
    out << index++ << ". " << p.name
        << ": Selling Price: " << format_money(p.initial_price);
    if (!p.features.empty()) {
      out << ", Features: ";
      for (std::size_t i = 0; i < p.features.size(); ++i) {
        if (i) out << ", ";
        out << p.features[i];
      }
    }
    out << ".\n";
  }
  return out.str();
}

std::string seller_inventory(const Scenario& s) {
  std::ostringstream out;
  out << "Inventory List:\n";
  int index = 1;
  for (const auto& p : s.products) {
    out << index++ << ". " << p.name << ": Cost: " << format_money(p.cost)
        << ", Selling Price: " << format_money(p.initial_price);
    if (!p.features.empty()) {
      out << ", Features: ";
      for (std::size_t i = 0; i < p.features.size(); ++i) {
        if (i) out << ", ";
        out << p.features[i];
      }
    }
    out << ".\n";
  }
  return out.str();
}

std::string reply_format(Role role) {
  std::ostringstream out;
  out << "Your Reply should include 3 parts: Thought, Talk, and Action.\n"
         "Thought: your inner strategic thinking of this bargaining session, "
         "considering both the price and the quality of the product;\n"
         "Talk: short talk that you are going to say to the "
      << (role == Role::buyer ? "seller" : "buyer")
      << ". Speak concisely and cut to the chase. Generate authentic and "
         "diverse sentences, avoiding repetition of sentences that have "
         "already appeared in the conversation;\n"
         "Action: one of the limited actions that define the real intention "
         "of your Talk.\n";
  if (role == Role::buyer) {
    out << "The type of your Action must be one of [BUY], [REJECT], [DEAL], "
           "[QUIT].\n";
  } else {
    out << "Action must be one of [SELL], [REJECT], [DEAL], [QUIT].\n";
  }
  return out.str();
}

std::string buyer_example() {
  return "Example:\n"
         "Thought: I'm a buyer, and I want to bargain. The asking price is "
         "$450, which seems high, so I'll offer $400.\n"
         "Talk: I'm looking for a good deal. Can we agree on $400?\n"
         "Action: [BUY] $400\n";
}

std::string seller_example() {
  return "Example:\n"
         "Thought: I'm a seller, and I need to make sure the price is higher "
         "than the cost.\n"
         "Talk: This one is worth at least $500. Can you go higher?\n"
         "Action: [SELL] $500\n";
}

std::string buyer_prompt(const Scenario& s) {
  const bool multi = s.market.product_mode == ProductMode::multi;
  const Product& desired = s.desired();
  const std::string category_one = lower(s.category);
  const std::string category_many = plural_noun(s.category);

  std::ostringstream out;
  out << "You are a buyer looking forward to buying a " << desired.name
      << " from the seller. Your budget is " << format_money(desired.wtp)
      << ", but you can hide your budget from the seller.\n\n";

  if (s.market.regime != Regime::vanilla) {
    out << "You can be deceptive or cunning to bargain the price. ";
  }
  out << "You can leave the seller if you don't want to pay the suggested "
         "price, and you can use this fact as part of your bargaining "
         "strategy. You can only buy a " << category_one
      << " with a price less than your budget; otherwise, you should quit "
         "negotiating.";
  if (multi) {
    out << " You can change your thought from buying a " << desired.name
        << " to other " << category_many
        << " considering your budget and product price according to the "
           "negotiation. But keep in mind that you are eager to buy a "
        << desired.name << ".";
  }
  out << "\n";

  switch (s.market.regime) {
    case Regime::monopoly:
      out << "This seller is the only source of " << category_many
          << " in this market; there is no other shop to buy from.\n";
      break;
    case Regime::installment:
      out << "The seller may offer an installment plan that splits the "
             "payment over several months; you may accept or propose one if "
             "it helps you close a better deal.\n";
      break;
    case Regime::negative_perception:
      out << "You have heard unfavorable reports about this seller's "
             "reputation, so weigh their claims with caution.\n";
      break;
    default:
      break;
  }

  out << "\n" << reply_format(Role::buyer) << "\n" << buyer_example() << "\n"
      << buyer_inventory(s);
  return out.str();
}

std::string seller_prompt(const Scenario& s) {
  const bool multi = s.market.product_mode == ProductMode::multi;
  const std::string category_one = lower(s.category);
  const std::string category_many = plural_noun(s.category);

  std::ostringstream out;
  out << "You are a seller looking forward to selling " << category_many
      << " from your Inventory List to the buyer. ";
  if (multi) {
    out << "Your inventory includes various types of " << category_many
        << ". Each " << category_one
        << " has a different cost, selling price, and features, but you can "
           "hide the cost from the buyer. ";
  } else {
    out << "You know the cost, selling price, and features of your "
        << category_one << ", but you can hide the cost from the buyer. ";
  }
  out << "Your task is to bargain with the buyer and reach a deal with the "
         "price as high as possible in limited turns. You can only sell "
         "items that are on the Inventory List. You have access to private "
         "information: the cost, and price of each " << category_one
      << " on the Inventory List, and do not disclose the real cost to the "
         "buyer.\n\n";

  if (s.market.regime != Regime::vanilla) {
    out << "You can be deceptive, cunning, or sly not to be bargained by the "
           "buyer. ";
  }
  out << "You should only agree on a deal when the selling price is higher "
         "than the cost; otherwise, you should quit negotiating.\n";

  switch (s.market.regime) {
    case Regime::monopoly:
      out << "You are the only seller of " << category_many
          << " in this market; the buyer has no alternative source.\n";
      break;
    case Regime::installment:
      out << "You may offer an installment plan that splits the payment over "
             "several months if it helps you close the deal at a higher "
             "price.\n";
      break;
    case Regime::negative_perception:
      out << "Your shop has recently suffered bad press; the buyer may "
             "distrust you, and you will need to counteract that "
             "impression.\n";
      break;
    default:
      break;
  }

  out << "\n" << reply_format(Role::seller) << "\n" << seller_example() << "\n"
      << seller_inventory(s);
  return out.str();
}

}  // namespace

std::string render_system_prompt(const Scenario& s, Role role) {
  const auto override_it = s.prompt_overrides.find(std::string(to_string(role)));
  if (override_it != s.prompt_overrides.end()) {
    return override_it->second;
  }
  if (!valid_market(s.market)) {
    throw ValidationError("scenario '" + s.id + "': no prompt template for " +
                          market_label(s.market) + " (vanilla requires single)");
  }
  return role == Role::buyer ? buyer_prompt(s) : seller_prompt(s);
}

}  // namespace bargain
