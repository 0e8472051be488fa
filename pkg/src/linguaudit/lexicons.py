"""Frozen per-language resources for the annotation fallbacks.

These tables trade linguistic fidelity for reproducibility: they are small,
versioned with the code, and never fetched from anywhere. Languages without
an entry fall back to empty lexicons (no function words, identity stemming).
"""

FUNCTION_WORDS: dict[str, frozenset[str]] = {
    "en": frozenset(
        """the a an and or but of in on at to for with by from as is are was were
        be been being it its he she they we you i this that these those not no
        do does did have has had will would can could shall should may might
        must there their them his her our your my me him us if then than so
        because while during about into over under after before between through
        against also which who whom whose what when where why how any all each
        per via""".split()
    ),
    "es": frozenset(
        """el la los las un una unos unas y o u e pero de del en a al para por
        con sin sobre entre hacia hasta desde durante segun es son era eran fue
        fueron ser estar esta estan estaba estaban ha han habia habian hay se su
        sus le les lo que quien cual cuales como cuando donde no si ni mas menos
        muy este esta estos estas ese esa esos esas aquel aquella yo tu el ella
        ellos ellas nosotros vosotros usted ustedes mi mis tus nuestro
        nuestra""".split()
    ),
    "fr": frozenset(
        """le la les l un une des du de d et ou mais donc or ni car en dans sur
        sous avec sans pour par chez vers entre contre pendant depuis est sont
        etait etaient etre ete a ont avait avaient avoir il elle ils elles on
        nous vous je tu me te se y au aux ce cet cette ces que qui quoi dont ou
        quand comme si ne pas plus moins tres son sa ses leur leurs mon ma mes
        ton ta tes notre votre nos vos""".split()
    ),
    "it": frozenset(
        """il lo la i gli le un uno una e o ma pero di del della dei delle dello
        degli in nel nella nei nelle a al alla ai alle allo agli da dal dalla
        dai dalle per con su sul sulla sui sulle tra fra sono era erano essere
        stato ha hanno aveva avevano avere si che chi cui come quando dove
        perche se non ne piu meno molto questo questa questi queste quello
        quella quelli quelle io tu lui lei noi voi loro mio mia suo sua nostro
        vostro""".split()
    ),
}

# Longest-first suffix strip lists for the fallback stemmer. One suffix is
# stripped per word, and only when the remaining stem keeps >= 3 characters.
STEM_SUFFIXES: dict[str, tuple[str, ...]] = {
    "en": ("ingly", "edly", "ings", "ing", "ied", "ies", "ed", "es", "ly", "s"),
    "es": (
        "aciones", "amiento", "imiento", "iendo", "ando", "ieron", "aron",
        "aban", "adas", "ados", "idas", "idos", "aba", "ada", "ado", "ida",
        "ido", "es", "os", "as", "an", "en", "s", "a", "e", "o",
    ),
    "fr": (
        "issements", "issement", "ements", "ement", "ations", "ation",
        "euses", "euse", "aient", "antes", "ante", "ants", "ant", "ees",
        "ee", "er", "ez", "ent", "es", "e", "s",
    ),
    "it": (
        "azioni", "azione", "amenti", "amento", "mente", "ando", "endo",
        "ati", "ate", "ata", "ato", "iti", "ite", "ita", "ito", "ano",
        "ono", "are", "ere", "ire", "i", "e", "a", "o",
    ),
}


def stem(word: str, language: str) -> str:
    """Strip one known suffix from the casefolded word (>= 3-char stems only)."""
    w = word.casefold()
    for suf in STEM_SUFFIXES.get(language, ()):
        if w.endswith(suf) and len(w) - len(suf) >= 3:
            return w[: len(w) - len(suf)]
    return w


def word_class(surface: str, is_capitalized: bool, language: str) -> str:
    """Coarse class for the relation-proxy fallback.

    Precedence: numeral, then function word (checked casefolded), then
    capitalized, then content word.
    """
    if surface[:1].isdigit():
        return "num"
    if surface.casefold() in FUNCTION_WORDS.get(language, frozenset()):
        return "fn"
    if is_capitalized:
        return "cap"
    return "cw"
