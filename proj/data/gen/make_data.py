#!/usr/bin/env python3
"""Regenerates the bundled knowledge graph, intent data and eval corpus.

The corpus is built in tier-exclusive subsets. Each case is checked here
against a re-implementation of the cleaning, rule, NER and mock-embedding
steps so a phrasing change that moves a case to the wrong tier fails loudly.
The C++ eval remains the final word.

    python3 data/gen/make_data.py            # writes into data/
"""
import csv
import io
import json
import math
import re
import sys
from pathlib import Path

DATA = Path(__file__).resolve().parent.parent
TAU = 0.80
DIM = 256

# --------------------------------------------------------------------------
# Knowledge graph

CITIES = ["Shenzhen", "Beijing", "Shanghai", "Guangzhou", "Hangzhou", "Zhuhai", "Foshan", "Qingdao",
          "Hefei", "Ningde", "Renhuai", "Changsha", "Wuhu", "Hohhot", "Xian", "Singapore", "New York"]

# id: (hq, former hq, chairman, ceo, industry, founded, exchange, code, employees, registered capital [m CNY])
SZSE, SSE, HKEX = "Shenzhen Stock Exchange", "Shanghai Stock Exchange", "Hong Kong Stock Exchange"
COMPANIES = {
    "wanke":      ("Shenzhen", "Guangzhou", "Yu Liang", "Zhu Jiusheng", "Real Estate", 1984, SZSE, "000002", 131817, 11930),
    "pingan":     ("Shenzhen", "Shanghai", "Ma Mingzhe", "Xie Yonglin", "Finance", 1988, SSE, "601318", 344223, 18210),
    "gree":       ("Zhuhai", "Guangzhou", "Dong Mingzhu", "Tan Jianming", "Manufacturing", 1989, SZSE, "000651", 72380, 5632),
    "moutai":     ("Renhuai", "Changsha", "Ding Xiongjun", "Li Jingren", "Consumer Goods", 1999, SSE, "600519", 32167, 1256),
    "midea":      ("Foshan", "Guangzhou", "Fang Hongbo", "Wang Jianguo", "Manufacturing", 1968, SZSE, "000333", 166243, 7026),
    "byd":        ("Shenzhen", "Xian", "Wang Chuanfu", "He Zhiqi", "Manufacturing", 1995, SZSE, "002594", 570060, 2911),
    "haier":      ("Qingdao", "Beijing", "Li Huagang", "Zhou Yunjie", "Manufacturing", 1984, SSE, "600690", 109586, 9446),
    "zte":        ("Shenzhen", "Xian", "Li Zixue", "Xu Ziyang", "Technology", 1985, SZSE, "000063", 74811, 4783),
    "cmb":        ("Shenzhen", "Guangzhou", "Miao Jianmin", "Wang Liang", "Finance", 1987, SSE, "600036", 112999, 25220),
    "icbc":       ("Beijing", "Shanghai", "Chen Siqing", "Liao Lin", "Finance", 1984, SSE, "601398", 427587, 356407),
    "sinopec":    ("Beijing", "Tianjin", "Ma Yongsheng", "Zhao Dong", "Energy", 2000, SSE, "600028", 374791, 121071),
    "catl":       ("Ningde", "Shanghai", "Zeng Yuqun", "Zhou Jia", "Technology", 2011, SZSE, "300750", 118914, 4399),
    "hikvision":  ("Hangzhou", "Shanghai", "Chen Zongnian", "Hu Yangzhong", "Technology", 2001, SZSE, "002415", 58000, 9330),
    "boe":        ("Beijing", "Hefei", "Chen Yanshun", "Gao Wenbao", "Technology", 1993, SZSE, "000725", 75000, 38196),
    "petrochina": ("Beijing", "Xian", "Dai Houliang", "Huang Yongzhang", "Energy", 1999, SSE, "601857", 375803, 183021),
    "sany":       ("Changsha", "Shanghai", "Liang Wengen", "Yu Hongfu", "Manufacturing", 1989, SSE, "600031", 25000, 8493),
    "yili":       ("Hohhot", "Beijing", "Pan Gang", "Zhang Jianqiu", "Consumer Goods", 1993, SSE, "600887", 67000, 6366),
    "conch":      ("Wuhu", "Hefei", "Yang Jun", "Li Qunfeng", "Manufacturing", 1997, HKEX, "600585", 47000, 5299),
    "longi":      ("Xian", "Hefei", "Zhong Baoshen", "Li Zhenguo", "Energy", 2000, SSE, "601012", 60000, 7578),
    "cpic":       ("Shanghai", "Beijing", "Kong Qingwei", "Fu Fan", "Finance", 1991, SSE, "601601", 100000, 9620),
}

INVESTORS = {  # id: (hq, portfolio)
    "hillhouse": ("Beijing",   ["wanke", "gree", "midea", "byd", "haier", "zte", "catl", "hikvision", "yili"]),
    "sequoia":   ("Beijing",   ["gree", "midea", "byd", "zte", "catl", "hikvision", "boe", "longi"]),
    "citic":     ("Beijing",   ["wanke", "pingan", "cmb", "icbc", "sinopec", "petrochina", "cpic"]),
    "efund":     ("Guangzhou", ["wanke", "moutai", "midea", "gree", "sany", "conch"]),
    "temasek":   ("Singapore", ["pingan", "icbc", "catl", "moutai", "longi"]),
    "huaxia":    ("Beijing",   ["moutai", "yili", "sany", "boe"]),
    "gic":       ("Singapore", ["pingan", "cmb", "haier"]),
    "blackrock": ("New York",  ["icbc", "petrochina"]),
}

ALIASES = [("wanke", "vanke"), ("wanke", "万科"), ("pingan", "ping an"), ("pingan", "平安"),
           ("gree", "格力"), ("moutai", "kweichow moutai"), ("cmb", "china merchants bank")]


def build_triples():
    rows = []
    for city in CITIES:
        rows += [(city, "type", "City", "string"), (city, "name", city, "string")]
    for cid, (hq, old, chair, ceo, ind, year, exch, code, emp, cap) in COMPANIES.items():
        rows += [
            (cid, "type", "Company", "string"), (cid, "name", cid, "string"),
            (cid, "located", hq, "string"), (cid, "former_located", old, "string"),
            (cid, "chairman", chair, "string"), (cid, "ceo", ceo, "string"),
            (cid, "industry", ind, "string"), (cid, "founded", str(year), "number"),
            (cid, "listed_on", exch, "string"), (cid, "stock_code", code, "string"),
            (cid, "employees", str(emp), "number"), (cid, "registered_capital", str(cap), "number"),
        ]
    for iid, (hq, portfolio) in INVESTORS.items():
        rows += [(iid, "type", "InvestmentCompany", "string"), (iid, "name", iid, "string"),
                 (iid, "located", hq, "string")]
        rows += [(cid, "invested_by", iid, "entity") for cid in portfolio]
    rows += [(e, "alias", a, "string") for e, a in ALIASES]
    return rows


def investors_of(cid):
    return sorted(i for i, (_, p) in INVESTORS.items() if cid in p)


def top_investors():
    ranked = sorted(INVESTORS, key=lambda i: (-len(INVESTORS[i][1]), i))
    counts = [len(INVESTORS[i][1]) for i in ranked]
    assert counts[4] != counts[5], "tie at the top-5 boundary"
    return ranked[:5]


def industry_counts():
    out = {}
    for c in COMPANIES.values():
        out[c[4]] = out.get(c[4], 0) + 1
    return out


def top_industries():
    counts = industry_counts()
    ranked = sorted(counts, key=lambda k: (-counts[k], k))
    assert counts[ranked[2]] != counts[ranked[3]], "tie at the top-3 boundary"
    return ranked[:3]


# --------------------------------------------------------------------------
# Intents, rules, templates

SIMPLE_FIELDS = {  # intent -> (predicate, tuple index)
    "hq_location": ("located", 0), "former_hq_location": ("former_located", 1),
    "chairman_of": ("chairman", 2), "ceo_of": ("ceo", 3), "industry_of": ("industry", 4),
    "founded_year": ("founded", 5), "listed_exchange": ("listed_on", 6), "stock_code": ("stock_code", 7),
    "employees": ("employees", 8), "registered_capital": ("registered_capital", 9),
}

TEMPLATES = [
    {"intent": i, "cql": f'MATCH (c:Company {{name:XX}})-[:{p}]->(x) RETURN x', "arity": 1}
    for i, (p, _) in SIMPLE_FIELDS.items()
] + [
    {"intent": "top_investors", "arity": 0,
     "cql": "MATCH (c:Company)-[:invested_by]->(f:InvestmentCompany) RETURN f.name, COUNT(c) ORDER BY COUNT(c) DESC LIMIT 5"},
    {"intent": "top_industries", "arity": 0,
     "cql": "MATCH (c:Company)-[:industry]->(i) RETURN i, COUNT(c) ORDER BY COUNT(c) DESC LIMIT 3"},
    {"intent": "investors_of", "arity": 1,
     "cql": "MATCH (c:Company {name:XX})-[:invested_by]->(f:InvestmentCompany) RETURN f.name"},
    {"intent": "portfolio_of", "arity": 1,
     "cql": "MATCH (c:Company)-[:invested_by]->(f:InvestmentCompany {name:XX}) RETURN c.name"},
    {"intent": "industry_peers", "arity": 1,
     "cql": "MATCH (c:Company {name:XX})-[:industry]->(i), (p:Company)-[:industry]->(i) RETURN p.name"},
    {"intent": "co_investors", "arity": 2,
     "cql": "MATCH (a:Company {name:XX1})-[:invested_by]->(f:InvestmentCompany), "
            "(b:Company {name:XX2})-[:invested_by]->(f) RETURN f.name"},
    {"intent": "city_companies", "arity": 1, "cql": "MATCH (c:Company {located:XX}) RETURN c.name"},
    {"intent": "investor_count", "arity": 1,
     "cql": "MATCH (c:Company {name:XX})-[:invested_by]->(f:InvestmentCompany) RETURN COUNT(f)"},
    {"intent": "investor_hq", "arity": 1,
     "cql": "MATCH (c:Company {name:XX})-[:invested_by]->(f:InvestmentCompany)-[:located]->(x) RETURN f.name, x"},
]

# File order is match precedence: the specific rules come first.
RULES = [
    ("former_hq_location", [["former", "previous", "previously", "earlier"], ["headquarters", "headquartered", "hq"]]),
    ("top_investors", [["popular", "top", "biggest", "largest"], ["investment", "investors", "investor"]]),
    ("top_industries", [["industries", "sectors"], ["most", "top", "largest"]]),
    ("co_investors", [["both", "common", "jointly"], ["investors", "invested", "backed", "investor"]]),
    ("investor_count", [["many", "number", "count"], ["investors", "investor", "shareholders"]]),
    ("investor_hq", [["investors", "investor"], ["headquartered", "headquarters", "based", "located"]]),
    ("portfolio_of", [["portfolio", "holdings"]]),
    ("investors_of", [["invested", "backed", "backers", "investors", "funded"], ["who", "which", "list"]]),
    ("industry_peers", [["same", "other"], ["industry", "sector"]]),
    ("city_companies", [["companies", "firms"], ["headquartered", "based", "located"]]),
    ("hq_location", [["headquarters", "headquartered", "hq"], ["where", "located", "location", "city", "based"]]),
    ("chairman_of", [["chairman", "chairwoman", "chairperson"]]),
    ("ceo_of", [["ceo", "chief"]]),
    ("industry_of", [["industry", "sector"], ["what", "which"]]),
    ("founded_year", [["founded", "established"]]),
    ("listed_exchange", [["exchange", "listed"]]),
    ("stock_code", [["stock", "ticker"], ["code", "symbol"]]),
    ("employees", [["employees", "staff", "workforce"]]),
    ("registered_capital", [["registered"], ["capital"]]),
]
ZH_RULES = [{"label": "hq_location", "keyword_groups": [["总"], ["部"], ["哪", "位"]], "pattern": None}]

# Entity-free example questions. The "emb" phrasings avoid every rule keyword
# and back the embedding-only subset; the others back rule phrasings.
SEEDS = {
    "hq_location": ["Where is the headquarters of the company located?",
                    "Which city hosts the head office?",
                    "In what city does the main office sit?"],
    "former_hq_location": ["Where were the former headquarters of the company?"],
    "chairman_of": ["Who is the chairman of the company?",
                    "Who presides over the board of directors?"],
    "industry_of": ["What industry is the company in?",
                    "What line of business does the firm operate in?"],
    "founded_year": ["When was the company founded?",
                     "What year did the firm first open its doors?"],
    "listed_exchange": ["On which exchange is the company listed?",
                        "Where do the shares trade publicly?"],
    "stock_code": ["What is the stock code of the company?",
                   "Which trading symbol identifies the shares?"],
    "employees": ["How many employees does the company have?",
                  "What is the total headcount on the payroll?"],
    "registered_capital": ["What is the registered capital of the company?"],
    "top_investors": ["Please name the five most popular investment companies.",
                      "Rank the funds holding stakes in the greatest number of firms."],
    "top_industries": ["Which industries have the most companies?",
                       "Rank the fields with the greatest count of firms."],
    "investors_of": ["Who invested in the company?",
                     "Whose capital went into the firm?"],
    "portfolio_of": ["Which companies are in the portfolio?",
                     "What firms received money from the fund?"],
    "industry_peers": ["Which other companies are in the same industry?",
                       "Name the firms competing in the identical field."],
    "co_investors": ["Which investors backed both?",
                     "What funds hold stakes in each of the two firms?"],
    "city_companies": ["Which companies are headquartered?",
                       "What firms call this city home?"],
    "investor_count": ["How many investors does the company have?",
                       "What is the tally of funds holding the firm?"],
    "investor_hq": ["Where are the investors of the company headquartered?",
                    "In which cities do the funds holding the firm reside?"],
}

STOP_EN = """a about an and are as at be been by can could did do does for from had has have he her his
how i in into is it its me my of on or our please she should so tell than that the their them then
there these they this those to us was we were will with would you your s t""".split()
STOP_ZH = "的 了 是 在 吗 呢 吧 啊 和 与 及 请 问 一 个 这 那 些".split()


# --------------------------------------------------------------------------
# Re-implementations of the engine steps (ASCII questions only)

def tokenize(text):
    return re.findall(r"[0-9a-z]+", text.lower())


def clean(text):
    toks = [t for t in tokenize(text) if t not in STOP_EN]
    assert toks, text
    return toks


def fnv1a(s, basis):
    h = basis
    for b in s.encode("utf-8"):
        h ^= b
        h = (h * 0x100000001b3) & 0xFFFFFFFFFFFFFFFF
    return h


def embed(tokens):
    acc = [0.0] * DIM
    for t in tokens:
        acc[fnv1a(t, 0xcbf29ce484222325) % DIM] += 1.0 if fnv1a(t, 0x9e3779b97f4a7c15) % 2 == 0 else -1.0
    if not any(acc):
        for t in tokens:
            acc[fnv1a(t, 0xcbf29ce484222325) % DIM] += 1.0
    n = math.sqrt(sum(v * v for v in acc))
    return [v / n for v in acc]


def cos(a, b):
    return sum(x * y for x, y in zip(a, b))


def match_rule(tokens):
    ts = set(tokens)
    for label, groups in RULES:
        if all(ts & set(g) for g in groups):
            return label
    return None


def build_lexicon():
    lex = {}
    surfaces = [(e, e) for e in list(COMPANIES) + list(INVESTORS) + CITIES]
    surfaces += [(e, e) for e in list(COMPANIES) + list(INVESTORS)]  # name triples
    surfaces += [(a, e) for e, a in ALIASES]
    for s, e in surfaces:
        for toks in (tokenize(s), [t for t in tokenize(s) if t not in STOP_EN]):
            if toks:
                lex.setdefault(" ".join(toks), e)
    return lex


LEX = build_lexicon()
MAX_LEX = max(len(k.split()) for k in LEX)


def ner(tokens):
    out, i = [], 0
    while i < len(tokens):
        for n in range(min(MAX_LEX, len(tokens) - i), 0, -1):
            key = " ".join(tokens[i:i + n])
            if key in LEX:
                out.append(LEX[key])
                i += n
                break
        else:
            i += 1
    return out


class Base:
    def __init__(self):
        self.records = []  # (label, text, vector)

    def upsert(self, label, text):
        if any(r[0] == label and r[1] == text for r in self.records):
            return
        self.records.append((label, text, embed(text.split())))

    def nearest(self, tokens):
        v = embed(tokens)
        best = None
        for label, text, vec in self.records:
            s = min(1.0, cos(v, vec))
            if abs(s - 1.0) < 1e-12:
                s = 1.0
            key = (-s, label)
            if best is None or key < best[0]:
                best = (key, label, s)
        return (best[1], best[2]) if best else (None, 0.0)


def seed_base():
    b = Base()
    for label, examples in SEEDS.items():
        for ex in examples:
            b.upsert(label, " ".join(clean(ex)))
    return b


# --------------------------------------------------------------------------
# Eval corpus

def gold_for(intent, ents):
    if intent in SIMPLE_FIELDS:
        v = COMPANIES[ents[0]][SIMPLE_FIELDS[intent][1]]
        return [str(v)]
    if intent == "top_investors":
        return top_investors()
    if intent == "top_industries":
        return top_industries()
    if intent == "investors_of":
        return investors_of(ents[0])
    if intent == "portfolio_of":
        return sorted(INVESTORS[ents[0]][1])
    if intent == "industry_peers":
        ind = COMPANIES[ents[0]][4]
        return sorted(c for c, v in COMPANIES.items() if v[4] == ind and c != ents[0])
    if intent == "co_investors":
        return sorted(set(investors_of(ents[0])) & set(investors_of(ents[1])))
    if intent == "city_companies":
        return sorted(c for c, v in COMPANIES.items() if v[0] == ents[0])
    if intent == "investor_count":
        return [str(len(investors_of(ents[0])))]
    if intent == "investor_hq":
        return sorted({INVESTORS[i][0] for i in investors_of(ents[0])})
    raise KeyError(intent)


KIND = {i: "simple" for i in SIMPLE_FIELDS}
KIND.update({i: "complex" for i in ["top_investors", "top_industries", "investors_of", "portfolio_of",
                                    "industry_peers", "co_investors", "city_companies", "investor_count",
                                    "investor_hq"]})

# (question, gold intent, gold entities)
# Rule hits that the embedding tier would also resolve on its own.
RULE_EMB = [
    ("Where is the headquarters of Wanke company located?", "hq_location", ["wanke"]),
    ("Where is the headquarters of the company Gree located?", "hq_location", ["gree"]),
    ("Which companies are headquartered in Hangzhou?", "city_companies", ["Hangzhou"]),
    ("Where were the former headquarters of the company Midea?", "former_hq_location", ["midea"]),
    ("Where were the former headquarters of the company BYD?", "former_hq_location", ["byd"]),
    ("Who is the chairman of the company Pingan?", "chairman_of", ["pingan"]),
    ("Who is the chairman of Moutai company?", "chairman_of", ["moutai"]),
    ("What industry is the company Hikvision in?", "industry_of", ["hikvision"]),
    ("What industry is the company Sinopec in?", "industry_of", ["sinopec"]),
    ("When was the company ZTE founded?", "founded_year", ["zte"]),
    ("When was the company Yili founded?", "founded_year", ["yili"]),
    ("On which exchange is the company CATL listed?", "listed_exchange", ["catl"]),
    ("On which exchange is the company Conch listed?", "listed_exchange", ["conch"]),
    ("What is the stock code of the company CMB?", "stock_code", ["cmb"]),
    ("What is the stock code of the company Sany?", "stock_code", ["sany"]),
    ("How many employees does the company BOE have?", "employees", ["boe"]),
    ("How many employees does the company Longi have?", "employees", ["longi"]),
    ("What is the registered capital of the company ICBC?", "registered_capital", ["icbc"]),
    ("What is the registered capital of the company CPIC?", "registered_capital", ["cpic"]),
    ("Please name the five most popular investment companies.", "top_investors", []),
    ("Which industries have the most companies?", "top_industries", []),
    ("Who invested in the company Wanke?", "investors_of", ["wanke"]),
    ("Who invested in the company Midea?", "investors_of", ["midea"]),
    ("Who invested in the company Moutai?", "investors_of", ["moutai"]),
    ("Which companies are in the portfolio of Hillhouse?", "portfolio_of", ["hillhouse"]),
    ("Which companies are in the portfolio of Temasek?", "portfolio_of", ["temasek"]),
    ("Which companies are in the portfolio of GIC?", "portfolio_of", ["gic"]),
    ("Which other companies are in the same industry as Gree?", "industry_peers", ["gree"]),
    ("Which other companies are in the same industry as ZTE?", "industry_peers", ["zte"]),
    ("Which investors backed both Gree and Midea?", "co_investors", ["gree", "midea"]),
    ("Which investors backed both Pingan and ICBC?", "co_investors", ["pingan", "icbc"]),
    ("Which companies are headquartered in Shenzhen?", "city_companies", ["Shenzhen"]),
    ("Which companies are headquartered in Beijing?", "city_companies", ["Beijing"]),
    ("How many investors does the company Pingan have?", "investor_count", ["pingan"]),
    ("How many investors does the company Haier have?", "investor_count", ["haier"]),
    ("Where are the investors of the company Yili headquartered?", "investor_hq", ["yili"]),
    ("Where are the investors of the company CMB headquartered?", "investor_hq", ["cmb"]),
    ("Where are the investors of the company Sany headquartered?", "investor_hq", ["sany"]),
]
# Rule hits phrased far from every stored example; the LLM script knows them.
RULE_LLM = [
    ("Could you remind me where exactly the headquarters of Midea happen to be located nowadays?", "hq_location", ["midea"]),
    ("Just out of curiosity, who currently serves as chairman over at ICBC these days?", "chairman_of", ["icbc"]),
    ("Roughly speaking, in what calendar year was CATL originally founded by its creators?", "founded_year", ["catl"]),
    ("For my spreadsheet I need the official stock ticker code assigned to Haier, thanks!", "stock_code", ["haier"]),
    ("Honestly, roughly how large is the employees roster at Pingan right now?", "employees", ["pingan"]),
    ("Remind me, which large investment houses currently rank as the top investors overall?", "top_investors", []),
    ("Out of curiosity, who exactly has backed Sinopec financially over recent years?", "investors_of", ["sinopec"]),
    ("Give me a full breakdown of the holdings inside the Sequoia portfolio please.", "portfolio_of", ["sequoia"]),
    ("For a quick market study, which other businesses operate in the same sector as BOE?", "industry_peers", ["boe"]),
    ("Roughly what number of distinct investors currently hold shares issued by Longi?", "investor_count", ["longi"]),
]
# Rule hits nothing else can resolve: no stored example or script entry for ceo_of.
RULE_ONLY = [
    ("Who is the CEO of Wanke?", "ceo_of", ["wanke"]),
    ("Who is the chief executive of Gree?", "ceo_of", ["gree"]),
]
# No rule applies; a stored example is close enough.
EMB_ONLY = [
    ("Which city hosts the head office of Pingan?", "hq_location", ["pingan"]),
    ("Which city hosts the head office of Moutai?", "hq_location", ["moutai"]),
    ("In what city does the main office of ZTE sit?", "hq_location", ["zte"]),
    ("Who presides over the board of directors at Gree?", "chairman_of", ["gree"]),
    ("Who presides over the board of directors at BYD?", "chairman_of", ["byd"]),
    ("What line of business does the firm Midea operate in?", "industry_of", ["midea"]),
    ("What year did the firm Haier first open its doors?", "founded_year", ["haier"]),
    ("What year did the firm Wanke first open its doors?", "founded_year", ["wanke"]),
    ("Where do the shares of Moutai trade publicly?", "listed_exchange", ["moutai"]),
    ("Which trading symbol identifies the shares of Gree?", "stock_code", ["gree"]),
    ("What is the total headcount on the payroll at CMB?", "employees", ["cmb"]),
    ("What is the total headcount on the payroll at Sany?", "employees", ["sany"]),
    ("Rank the funds holding stakes in the greatest number of firms.", "top_investors", []),
    ("Rank the fields with the greatest count of firms.", "top_industries", []),
    ("Whose capital went into the firm BYD?", "investors_of", ["byd"]),
    ("Whose capital went into the firm CATL?", "investors_of", ["catl"]),
    ("What firms received money from the fund Citic?", "portfolio_of", ["citic"]),
    ("What firms received money from the fund Efund?", "portfolio_of", ["efund"]),
    ("Name the firms competing in the identical field as Pingan.", "industry_peers", ["pingan"]),
    ("What funds hold stakes in each of the two firms BYD and ZTE?", "co_investors", ["byd", "zte"]),
    ("What firms call this city home: Zhuhai?", "city_companies", ["Zhuhai"]),
    ("What firms call this city home: Xian?", "city_companies", ["Xian"]),
    ("What is the tally of funds holding the firm Wanke?", "investor_count", ["wanke"]),
    ("What is the tally of funds holding the firm Moutai?", "investor_count", ["moutai"]),
    ("In which cities do the funds holding the firm ICBC reside?", "investor_hq", ["icbc"]),
]
# No rule, nothing stored nearby; only the LLM script resolves these.
LLM_ONLY = [
    ("Who holds the gavel in Midea's boardroom?", "chairman_of", ["midea"]),
    ("Since when has Sinopec been around?", "founded_year", ["sinopec"]),
    ("Tell me about the size of Gree's team.", "employees", ["gree"]),
    ("Whose money sits behind Yili?", "investors_of", ["yili"]),
    ("Which fund shows up most across everyone's cap tables?", "top_investors", []),
    ("Where did Blackrock put money?", "portfolio_of", ["blackrock"]),
    ("Give me Conch's rivals.", "industry_peers", ["conch"]),
    ("Name funds sitting in both Wanke and Moutai cap tables.", "co_investors", ["wanke", "moutai"]),
    ("Count Gree's shareholding funds.", "investor_count", ["gree"]),
    ("From which cities do Moutai's shareholding funds operate?", "investor_hq", ["moutai"]),
]
# The embedding tier confidently picks the wrong intent; the feedback
# dialogue supplies the right one.
ADAPT_ONLY = [
    ("Which city hosts the former head office of Wanke?", "former_hq_location", ["wanke"]),
    ("Which city hosts the old head office of Gree?", "former_hq_location", ["gree"]),
    ("In what city did the original main office of Haier sit?", "former_hq_location", ["haier"]),
    ("In what city did the first main office of CMB sit?", "former_hq_location", ["cmb"]),
    ("Which city hosts the earliest head office of ICBC?", "former_hq_location", ["icbc"]),
]
# Entity names the lexicon cannot find.
MISSPELLED = [
    ("Where is the headquarters of Wamke located?", "hq_location", ["wanke"]),
    ("Who is the chairman of Gre?", "chairman_of", ["gree"]),
    ("When was the company Haierr founded?", "founded_year", ["haier"]),
    ("Who invested in the company Mideaa?", "investors_of", ["midea"]),
    ("Which companies are in the portfolio of Hilhouse?", "portfolio_of", ["hillhouse"]),
]
# Intents the library has no query for; the LLM proposes a new label.
NEW_INTENT = [
    ("What is the dividend policy of Wanke?", "dividend_policy", ["wanke"], "simple"),
    ("How much debt does Gree carry?", "debt_level", ["gree"], "simple"),
    ("What were Pingan's quarterly earnings trends?", "earnings_trend", ["pingan"], "complex"),
    ("Which lawsuits involve Moutai and its suppliers?", "litigation", ["moutai"], "complex"),
    ("How has BYD's market share evolved against rivals?", "market_share_trend", ["byd"], "complex"),
]

SCRIPT_REASONING = "The question asks about {what}, which matches a known intent."


def main():
    triples = build_triples()
    base = seed_base()
    script = []
    cases = []
    problems = []

    def check(q, intent, ents, subset):
        toks = clean(q)
        text = " ".join(toks)
        rule = match_rule(toks)
        label, sim = base.nearest(toks)
        found = ner(toks)
        info = f"[{subset}] {q!r} rule={rule} emb={label}@{sim:.3f} ner={found}"
        expect_rule = subset.startswith("rule") or subset == "misspelled"
        if expect_rule and rule != intent:
            problems.append(info + f" expected rule {intent}")
        if not expect_rule and rule is not None:
            problems.append(info + " must not match a rule")
        emb_ok = label == intent and sim >= TAU
        if subset in ("rule_emb", "emb_only") and not emb_ok:
            problems.append(info + " needs an embedding hit")
        if subset in ("rule_llm", "rule_only", "llm_only", "new_intent") and sim >= TAU:
            problems.append(info + " must stay below tau")
        if subset == "adapt_only" and not (sim >= TAU and label != intent and sim < 1.0):
            problems.append(info + " needs a wrong embedding hit")
        if subset == "misspelled":
            if found == ents:
                problems.append(info + " entity must not be recognized")
        elif found != ents:
            problems.append(info + f" expected entities {ents}")
        return text

    groups = [("rule_emb", RULE_EMB), ("rule_llm", RULE_LLM), ("rule_only", RULE_ONLY), ("emb_only", EMB_ONLY),
              ("llm_only", LLM_ONLY), ("adapt_only", ADAPT_ONLY), ("misspelled", MISSPELLED)]
    for subset, items in groups:
        for q, intent, ents in items:
            text = check(q, intent, ents, subset)
            if subset in ("rule_llm", "llm_only"):
                script.append({"template": "intent_fallback", "match": {"question": text},
                               "reply": SCRIPT_REASONING.format(what=intent.replace("_", " ")) + f"\nintent: {intent}"})
            gold = gold_for(intent, ents)
            if not gold:
                problems.append(f"[{subset}] {q!r} has an empty gold answer")
            cases.append({"question": q, "gold_intent": intent, "gold_entities": ents,
                          "gold_answer_values": gold, "kind": KIND[intent], "subset": subset})
    for q, intent, ents, kind in NEW_INTENT:
        text = check(q, intent, ents, "new_intent")
        script.append({"template": "intent_fallback", "match": {"question": text},
                       "reply": f"None of the known intents fit.\nintent: {intent}"})
        cases.append({"question": q, "gold_intent": intent, "gold_entities": ents,
                      "gold_answer_values": ["(not in the knowledge graph)"], "kind": kind, "subset": "new_intent"})

    for i, c in enumerate(cases, 1):
        c["id"] = f"q{i:03d}"
    kinds = [c["kind"] for c in cases]
    if len(cases) != 100 or kinds.count("simple") != 50:
        problems.append(f"corpus shape: {len(cases)} cases, {kinds.count('simple')} simple")

    if problems:
        print("\n".join(problems), file=sys.stderr)
        sys.exit(1)

    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["subject", "predicate", "object", "object_type"])
    w.writerows(triples)
    (DATA / "triples.csv").write_text(buf.getvalue(), encoding="utf-8")

    def jsonl(path, rows):
        path.write_text("".join(json.dumps(r, ensure_ascii=False) + "\n" for r in rows), encoding="utf-8")

    jsonl(DATA / "templates.jsonl", TEMPLATES)
    jsonl(DATA / "rules.jsonl", [{"label": l, "keyword_groups": g, "pattern": None} for l, g in RULES] + ZH_RULES)
    jsonl(DATA / "seeds.jsonl", [{"label": l, "examples": ex} for l, ex in SEEDS.items()])
    jsonl(DATA / "llm_script.jsonl", script)
    (DATA / "eval").mkdir(exist_ok=True)
    keys = ["id", "question", "gold_intent", "gold_entities", "gold_answer_values", "kind", "subset"]
    jsonl(DATA / "eval" / "dataset.jsonl", [{k: c[k] for k in keys} for c in cases])
    (DATA / "stopwords_en.txt").write_text("# English stop words, one per line\n" + "\n".join(STOP_EN) + "\n",
                                           encoding="utf-8")
    (DATA / "stopwords_zh.txt").write_text("# Chinese stop words, one per line\n" + "\n".join(STOP_ZH) + "\n",
                                           encoding="utf-8")
    print(f"{len(triples)} triples, {len(cases)} cases, {len(script)} script entries")


if __name__ == "__main__":
    main()
