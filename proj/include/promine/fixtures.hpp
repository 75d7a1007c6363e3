#pragma once

#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "promine/errors.hpp"
#include "promine/multilevel.hpp"
#include "promine/ocel.hpp"
#include "promine/timestamp.hpp"

namespace promine::fixtures {

struct FixtureFile {
  std::string name;
  std::string content;
};

inline const std::vector<std::string>& fixture_names() {
  static const std::vector<std::string> names = {"p2p-mini", "order-processing", "org-trio",
                                                 "org-counts-567"};
  return names;
}

namespace detail {

inline Timestamp ts(const std::string& iso) { return *try_parse_timestamp(iso); }

inline std::string iso(const std::string& day, int hour, int minute) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%sT%02d:%02d:00.000Z", day.c_str(), hour, minute);
  return buf;
}

}  // namespace detail

// Procure-to-pay mini log: 11 rows over Order < Receipt < Invoice. Rows 8 and
// 9 link two receipts to one invoice at the same instant and merge into a
// single event; O2 is a running order with no receipt yet.
inline std::vector<FixtureFile> p2p_mini() {
  std::string csv =
      "Order ID,Receipt ID,Invoice ID,Activity,Timestamp\n"
      "O1,,,Order Creation,2024-03-04T08:00:00.000Z\n"
      "O1,,,Order Approved,2024-03-04T08:30:00.000Z\n"
      "O1,R1,,Goods Receipt Created,2024-03-04T09:00:00.000Z\n"
      ",R1,,Goods Receipt Confirmed,2024-03-04T09:30:00.000Z\n"
      "O1,R2,,Goods Receipt Created,2024-03-04T10:00:00.000Z\n"
      ",R2,,Goods Receipt Confirmed,2024-03-04T10:30:00.000Z\n"
      ",,I1,Invoice Created,2024-03-04T11:00:00.000Z\n"
      ",R1,I1,Invoice Confirmed,2024-03-04T11:30:00.000Z\n"
      ",R2,I1,Invoice Confirmed,2024-03-04T11:30:00.000Z\n"
      "O2,,,Order Creation,2024-03-04T12:00:00.000Z\n"
      "O2,,,Order Approved,2024-03-04T12:30:00.000Z\n";

  nlohmann::json schema{
      {"entities", {"Order", "Receipt", "Invoice"}},
      {"processid_columns",
       {{"Order", "Order ID"}, {"Receipt", "Receipt ID"}, {"Invoice", "Invoice ID"}}},
      {"activity_column", "Activity"},
      {"timestamp_column", "Timestamp"}};
  nlohmann::json project{{"mode", "multilevel"},
                         {"log", "p2p-mini.csv"},
                         {"schema", schema},
                         {"reference", "p2p-mini.reference.json"}};

  // reference = the discovered model itself, so the shipped fixture replays clean
  multilevel::MultilevelConfig config = multilevel::multilevel_config_from_json(schema);
  std::istringstream in(csv);
  auto rows = multilevel::parse_multilevel_csv(in, config);
  auto model = multilevel::discover(rows, config.schema);
  nlohmann::json reference = multilevel::reference_to_json(multilevel::reference_from_model(model));

  return {{"p2p-mini.csv", csv},
          {"p2p-mini.project.json", project.dump(2) + "\n"},
          {"p2p-mini.reference.json", reference.dump(2) + "\n"}};
}

// Order-processing object-centric log over Order/Product/Customer/Carrier.
inline std::vector<FixtureFile> order_processing() {
  using namespace ocel;
  Log log;
  log.types = {{"Carrier", {}},
               {"Customer", {{"segment", ValueKind::String}}},
               {"Order", {{"status", ValueKind::String}}},
               {"Product", {{"price", ValueKind::Number}}}};

  auto add_object = [&](const std::string& id, const std::string& type) {
    log.objects[id] = Object{id, type, {}};
  };
  add_object("o1", "Order");
  add_object("o2", "Order");
  add_object("pr1", "Product");
  add_object("pr2", "Product");
  add_object("pr3", "Product");
  add_object("c1", "Customer");
  add_object("c2", "Customer");
  add_object("k1", "Carrier");
  log.objects["o1"].timeline = {{detail::ts("2024-05-06T08:00:00Z"), "status", std::string("created")},
                                {detail::ts("2024-05-06T10:00:00Z"), "status", std::string("paid")}};
  log.objects["o2"].timeline = {{detail::ts("2024-05-06T09:00:00Z"), "status", std::string("created")}};
  log.objects["pr1"].timeline = {{detail::ts("2024-05-06T08:00:00Z"), "price", 99.5}};
  log.objects["c1"].timeline = {{detail::ts("2024-05-06T08:00:00Z"), "segment", std::string("retail")}};

  auto event = [&](const std::string& id, const std::string& activity, const std::string& time,
                   std::vector<Relationship> rels) {
    Event ev;
    ev.id = id;
    ev.activity = activity;
    ev.time = detail::ts(time);
    ev.relationships = std::move(rels);
    std::sort(ev.relationships.begin(), ev.relationships.end());
    log.events.push_back(std::move(ev));
  };
  event("e1", "Order Creation", "2024-05-06T08:00:00Z",
        {{"o1", "order"}, {"pr1", "item"}, {"c1", "customer"}});
  event("e2", "Order Creation", "2024-05-06T09:00:00Z",
        {{"o2", "order"}, {"pr2", "item"}, {"pr3", "item"}, {"c2", "customer"}});
  event("e3", "Order Confirmation", "2024-05-06T09:30:00Z", {{"o1", "order"}, {"c1", std::nullopt}});
  event("e4", "Payment Received", "2024-05-06T10:00:00Z", {{"o1", "order"}, {"c1", "payer"}});
  event("e5", "Order Confirmation", "2024-05-06T10:30:00Z", {{"o2", "order"}, {"c2", std::nullopt}});
  event("e6", "Payment Received", "2024-05-06T11:00:00Z", {{"o2", "order"}, {"c2", "payer"}});
  event("e7", "Product Shipped", "2024-05-06T12:00:00Z", {{"pr1", "cargo"}, {"k1", "carrier"}});
  event("e8", "Product Shipped", "2024-05-06T12:30:00Z", {{"pr2", "cargo"}, {"k1", "carrier"}});
  event("e9", "Product Shipped", "2024-05-06T13:00:00Z", {{"pr3", "cargo"}, {"k1", "carrier"}});
  event("e10", "Product Delivered", "2024-05-07T09:00:00Z", {{"pr1", "cargo"}, {"k1", "carrier"}});
  event("e11", "Product Delivered", "2024-05-07T09:30:00Z", {{"pr2", "cargo"}, {"k1", "carrier"}});
  event("e12", "Product Delivered", "2024-05-07T10:00:00Z", {{"pr3", "cargo"}, {"k1", "carrier"}});

  log.o2o = {{"o1", "pr1", "contains"}, {"o2", "pr2", "contains"}, {"o2", "pr3", "contains"},
             {"o1", "c1", "placed_by"}, {"o2", "c2", "placed_by"}};
  std::sort(log.o2o.begin(), log.o2o.end());
  validate_log(log);

  nlohmann::json project{{"mode", "ocel"},
                         {"log", "order-processing.ocel.json"},
                         {"options", {{"flatten_type", "Order"}}}};
  return {{"order-processing.ocel.json", to_json(log).dump(2) + "\n"},
          {"order-processing.project.json", project.dump(2) + "\n"}};
}

namespace detail {

inline nlohmann::json org_log_columns() {
  return {{"case_id", "Case ID"}, {"activity", "Activity"}, {"start_ts", "Timestamp"}};
}

inline nlohmann::json org_project(const std::string& prefix, bool po_star) {
  nlohmann::json tables = nlohmann::json::array();
  tables.push_back({{"name", "DeliveryItems"},
                    {"file", prefix + "-delivery_items.csv"},
                    {"primary_key", "delivery_item_id"}});
  tables.push_back({{"name", "PurchaseOrderItems"},
                    {"file", prefix + "-po_items.csv"},
                    {"primary_key", "po_item_id"}});
  tables.push_back({{"name", "SalesOrderItems"},
                    {"file", prefix + "-sales_items.csv"},
                    {"primary_key", "sales_item_id"}});
  nlohmann::json logs = nlohmann::json::array();
  logs.push_back({{"process_name", "purchase"},
                  {"file", prefix + "-purchase.csv"},
                  {"case_target", {{"table", "PurchaseOrderItems"}}},
                  {"columns", org_log_columns()}});
  logs.push_back({{"process_name", "sales"},
                  {"file", prefix + "-sales.csv"},
                  {"case_target", {{"table", "SalesOrderItems"}}},
                  {"columns", org_log_columns()}});
  logs.push_back({{"process_name", "delivery"},
                  {"file", prefix + "-delivery.csv"},
                  {"case_target", {{"table", "DeliveryItems"}}},
                  {"columns", org_log_columns()}});
  nlohmann::json joins = nlohmann::json::array();
  if (po_star) {
    joins.push_back({{"from", {{"table", "SalesOrderItems"}, {"column", "po_item_id"}}},
                     {"to", {{"table", "PurchaseOrderItems"}}}});
    joins.push_back({{"from", {{"table", "DeliveryItems"}, {"column", "po_item_id"}}},
                     {"to", {{"table", "PurchaseOrderItems"}}}});
  } else {
    joins.push_back({{"from", {{"table", "DeliveryItems"}, {"column", "po_item_id"}}},
                     {"to", {{"table", "PurchaseOrderItems"}}}});
    joins.push_back({{"from", {{"table", "DeliveryItems"}, {"column", "sales_item_id"}}},
                     {"to", {{"table", "SalesOrderItems"}}}});
  }
  return nlohmann::json{{"mode", "org"}, {"tables", tables}, {"logs", logs}, {"joins", joins}};
}

}  // namespace detail

// Three interconnected processes sharing item tables, delivery items holding
// the foreign keys to both order sides.
inline std::vector<FixtureFile> org_trio() {
  const std::string day = "2024-06-03";
  std::string po_items = "po_item_id,material\np1,M-100\np2,M-200\n";
  std::string sales_items = "sales_item_id,region\ns1,EMEA\ns2,APAC\n";
  std::string delivery_items =
      "delivery_item_id,po_item_id,sales_item_id\nd1,p1,s1\nd2,p2,s2\n";

  std::string purchase = "Case ID,Activity,Timestamp\n";
  std::string sales = "Case ID,Activity,Timestamp\n";
  std::string delivery = "Case ID,Activity,Timestamp\n";
  for (int i = 1; i <= 2; ++i) {
    int base = 8 + (i - 1) * 2;  // two-hour block per chain
    std::string si = "s" + std::to_string(i);
    std::string pi = "p" + std::to_string(i);
    std::string di = "d" + std::to_string(i);
    sales += si + ",Sales Order Created," + detail::iso(day, base, 0) + "\n";
    sales += si + ",Credit Check," + detail::iso(day, base, 10) + "\n";
    purchase += pi + ",Requisition Created," + detail::iso(day, base, 20) + "\n";
    purchase += pi + ",Purchase Order Approved," + detail::iso(day, base, 30) + "\n";
    delivery += di + ",Delivery Created," + detail::iso(day, base, 40) + "\n";
    delivery += di + ",Goods Issued," + detail::iso(day, base, 50) + "\n";
  }

  nlohmann::json project = detail::org_project("org-trio", /*po_star=*/false);
  return {{"org-trio-po_items.csv", po_items},
          {"org-trio-sales_items.csv", sales_items},
          {"org-trio-delivery_items.csv", delivery_items},
          {"org-trio-purchase.csv", purchase},
          {"org-trio-sales.csv", sales},
          {"org-trio-delivery.csv", delivery},
          {"org-trio.project.json", project.dump(2) + "\n"}};
}

// Cardinalities tuned so the Credit Check -> Requisition Created connection
// carries 5 delivery items, 6 purchase order items and 7 sales order items:
// s6 and s7 share p6, and p6 has no delivery yet.
inline std::vector<FixtureFile> org_counts_567() {
  const std::string day = "2024-06-10";
  std::string po_items = "po_item_id\n";
  for (int i = 1; i <= 6; ++i) po_items += "p" + std::to_string(i) + "\n";
  std::string sales_items = "sales_item_id,po_item_id\n";
  for (int i = 1; i <= 7; ++i) {
    int p = i <= 6 ? i : 6;
    sales_items += "s" + std::to_string(i) + ",p" + std::to_string(p) + "\n";
  }
  std::string delivery_items = "delivery_item_id,po_item_id\n";
  for (int i = 1; i <= 5; ++i)
    delivery_items += "d" + std::to_string(i) + ",p" + std::to_string(i) + "\n";

  std::string purchase = "Case ID,Activity,Timestamp\n";
  std::string sales = "Case ID,Activity,Timestamp\n";
  std::string delivery = "Case ID,Activity,Timestamp\n";
  for (int i = 1; i <= 5; ++i) {
    int base = 8 + (i - 1);
    std::string si = "s" + std::to_string(i);
    std::string pi = "p" + std::to_string(i);
    std::string di = "d" + std::to_string(i);
    sales += si + ",Sales Order Created," + detail::iso(day, base, 0) + "\n";
    sales += si + ",Credit Check," + detail::iso(day, base, 10) + "\n";
    purchase += pi + ",Requisition Created," + detail::iso(day, base, 20) + "\n";
    purchase += pi + ",Purchase Order Approved," + detail::iso(day, base, 30) + "\n";
    delivery += di + ",Delivery Created," + detail::iso(day, base, 40) + "\n";
    delivery += di + ",Goods Issued," + detail::iso(day, base, 50) + "\n";
  }
  // s6 and s7 both feed p6; the requisition follows the second credit check
  sales += "s6,Sales Order Created," + detail::iso(day, 13, 0) + "\n";
  sales += "s6,Credit Check," + detail::iso(day, 13, 10) + "\n";
  sales += "s7,Sales Order Created," + detail::iso(day, 14, 0) + "\n";
  sales += "s7,Credit Check," + detail::iso(day, 14, 10) + "\n";
  purchase += "p6,Requisition Created," + detail::iso(day, 14, 20) + "\n";
  purchase += "p6,Purchase Order Approved," + detail::iso(day, 14, 30) + "\n";

  nlohmann::json project = detail::org_project("org-counts-567", /*po_star=*/true);
  return {{"org-counts-567-po_items.csv", po_items},
          {"org-counts-567-sales_items.csv", sales_items},
          {"org-counts-567-delivery_items.csv", delivery_items},
          {"org-counts-567-purchase.csv", purchase},
          {"org-counts-567-sales.csv", sales},
          {"org-counts-567-delivery.csv", delivery},
          {"org-counts-567.project.json", project.dump(2) + "\n"}};
}

inline std::vector<FixtureFile> generate(const std::string& name) {
  if (name == "p2p-mini") return p2p_mini();
  if (name == "order-processing") return order_processing();
  if (name == "org-trio") return org_trio();
  if (name == "org-counts-567") return org_counts_567();
  throw query_error("unknown fixture '" + name + "'");
}

}  // namespace promine::fixtures
